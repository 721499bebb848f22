"""Traffic topology decomposition.

Splits a traffic matrix into structural categories — isolated links,
supernode leaves, supernodes, core, and core leaves — and reports each
category's share of sources, packets, links, and destinations.  Every matrix
cell lands in exactly one packet-carrying class, so the per-category packet
and link counts tile the matrix totals exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Set, Tuple

from .matrix import AggregateSummary, TrafficMatrix

DEFAULT_SUPERNODE_COUNT = 5

CATEGORY_ORDER = (
    "isolated_links",
    "supernode_leaves",
    "supernodes",
    "core",
    "core_leaves",
)

TOPOLOGY_CSV_HEADER = (
    "category",
    "sources",
    "packets",
    "links",
    "destinations",
    "frac_sources",
    "frac_packets",
    "frac_links",
    "frac_destinations",
)


@dataclass(frozen=True)
class FanVectors:
    """Per-node connection counts: fan-out for sources, fan-in for destinations."""

    d_out: Dict[str, int]
    d_in: Dict[str, int]


@dataclass(frozen=True)
class CategoryStats:
    """Counts attributed to one topology category."""

    sources: int
    packets: int
    links: int
    destinations: int

    def __post_init__(self):
        for name in ("sources", "packets", "links", "destinations"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
        if self.links > self.packets:
            raise ValueError(
                f"links ({self.links}) cannot exceed packets ({self.packets})"
            )


ZERO_STATS = CategoryStats(sources=0, packets=0, links=0, destinations=0)


@dataclass(frozen=True)
class TopologyBreakdown:
    """Full decomposition of one matrix plus per-category fractions."""

    categories: Dict[str, CategoryStats]
    supernode_ids: Tuple[str, ...]
    supernode_internal: CategoryStats
    totals: AggregateSummary
    fractions: Dict[str, "CategoryFractions"]
    residual_packets: int
    residual_links: int


@dataclass(frozen=True)
class CategoryFractions:
    """A category's share of each matrix total, each in [0, 1]."""

    sources: float
    packets: float
    links: float
    destinations: float

    def __post_init__(self):
        for name in ("sources", "packets", "links", "destinations"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"fraction {name} must be in [0, 1], got {value}")


def fan_vectors(matrix: TrafficMatrix) -> FanVectors:
    """Fan-out and fan-in for every source and destination in the matrix."""
    return FanVectors(
        d_out=matrix.reduce("row", "nnz"), d_in=matrix.reduce("col", "nnz")
    )


def _submatrix_stats(matrix: TrafficMatrix) -> CategoryStats:
    summary = matrix.aggregates()
    return CategoryStats(
        sources=summary.unique_sources,
        packets=summary.valid_packets,
        links=summary.unique_links,
        destinations=summary.unique_destinations,
    )


def isolated_links(matrix: TrafficMatrix, fans: FanVectors) -> CategoryStats:
    """Links whose source has fan-out 1 and whose destination has fan-in 1.

    Structurally, isolated sources, links, and destinations are all equal:
    each surviving cell is its row's and its column's only entry.
    """
    i_1 = {key for key, degree in fans.d_out.items() if degree == 1}
    j_1 = {key for key, degree in fans.d_in.items() if degree == 1}
    sources = links = packets = 0
    for src in i_1:
        dst, count = next(iter(matrix.rows[src].items()))
        if dst in j_1:
            sources += 1
            links += 1
            packets += count
    return CategoryStats(
        sources=sources, packets=packets, links=links, destinations=sources
    )


def find_supernodes(
    matrix: TrafficMatrix, k: int = DEFAULT_SUPERNODE_COUNT
) -> List[str]:
    """Up to k nodes by combined fan-out + fan-in, found by elimination.

    After each pick the node's row and column are removed and degrees are
    recomputed, so later picks reflect the residual graph.  Ties go to the
    larger total packet volume, then the lexicographically smaller key.
    Selection stops early once the best remaining combined degree is <= 1.
    k = 0 disables supernode extraction entirely.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    rows = {src: dict(row) for src, row in matrix.rows.items()}
    cols = {dst: dict(col) for dst, col in matrix.cols.items()}
    degree: Dict[str, int] = {}
    volume: Dict[str, int] = {}
    for src, row in rows.items():
        degree[src] = degree.get(src, 0) + len(row)
        volume[src] = volume.get(src, 0) + sum(row.values())
    for dst, col in cols.items():
        degree[dst] = degree.get(dst, 0) + len(col)
        volume[dst] = volume.get(dst, 0) + sum(col.values())

    chosen: List[str] = []
    for _ in range(k):
        best_key = None
        best_rank = None
        for key, deg in degree.items():
            if deg <= 0:
                continue
            rank = (deg, volume[key])
            if (
                best_key is None
                or rank > best_rank
                or (rank == best_rank and key < best_key)
            ):
                best_key, best_rank = key, rank
        if best_key is None or best_rank[0] <= 1:
            break
        chosen.append(best_key)
        for dst, count in rows.pop(best_key, {}).items():
            col = cols[dst]
            del col[best_key]
            degree[dst] -= 1
            volume[dst] -= count
        for src, count in cols.pop(best_key, {}).items():
            row = rows[src]
            del row[best_key]
            degree[src] -= 1
            volume[src] -= count
        degree.pop(best_key, None)
        volume.pop(best_key, None)
    return chosen


def supernode_leaves(
    matrix: TrafficMatrix, supernodes: Sequence[str], fans: FanVectors
) -> CategoryStats:
    """Degree-1 nodes whose only link touches a supernode.

    A cell that also qualifies as an isolated link (both endpoints degree 1)
    stays with the isolated category, so degree-1 nodes are never counted
    twice.  Each leaf is attributed to the first supernode that claims it.
    """
    source_leaves: Set[str] = set()
    dest_leaves: Set[str] = set()
    sources = destinations = links = packets = 0
    for sn in supernodes:
        if fans.d_in.get(sn, 0) != 1:  # degree-1 feeders are isolated otherwise
            for src, count in matrix.cols.get(sn, {}).items():
                if fans.d_out[src] == 1 and src not in source_leaves:
                    source_leaves.add(src)
                    sources += 1
                    links += 1
                    packets += count
        if fans.d_out.get(sn, 0) != 1:
            for dst, count in matrix.rows.get(sn, {}).items():
                if fans.d_in[dst] == 1 and dst not in dest_leaves:
                    dest_leaves.add(dst)
                    destinations += 1
                    links += 1
                    packets += count
    return CategoryStats(
        sources=sources, packets=packets, links=links, destinations=destinations
    )


def core_membership(
    matrix: TrafficMatrix,
    supernodes: Sequence[str],
    fans: FanVectors,
    *,
    strict_inequality: bool = False,
) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    """Multiply-connected sources and destinations, excluding supernodes.

    Default semantics drop the supernode identities from the fan-above-1
    sets.  The strict_inequality variant instead keeps nodes whose fan lies
    strictly between 1 and the first supernode's fan on the same side, which
    can differ when later supernodes' fans match or trail other core nodes.
    """
    if strict_inequality and supernodes:
        first = supernodes[0]
        out_cap = fans.d_out.get(first, 0)
        in_cap = fans.d_in.get(first, 0)
        i_core = frozenset(
            key for key, deg in fans.d_out.items() if 1 < deg < out_cap
        )
        j_core = frozenset(key for key, deg in fans.d_in.items() if 1 < deg < in_cap)
        return i_core, j_core
    excluded = set(supernodes)
    i_core = frozenset(
        key for key, deg in fans.d_out.items() if deg > 1 and key not in excluded
    )
    j_core = frozenset(
        key for key, deg in fans.d_in.items() if deg > 1 and key not in excluded
    )
    return i_core, j_core


def core_stats(
    matrix: TrafficMatrix, i_core: FrozenSet[str], j_core: FrozenSet[str]
) -> CategoryStats:
    """Stats of the submatrix restricted to core sources and destinations."""
    return _submatrix_stats(matrix.submatrix(i_core, j_core))


def core_leaves(
    matrix: TrafficMatrix,
    i_core: FrozenSet[str],
    j_core: FrozenSet[str],
    fans: FanVectors,
) -> CategoryStats:
    """Degree-1 nodes whose only link lands on (or comes from) a core node."""
    sources = destinations = links = packets = 0
    for src, degree in fans.d_out.items():
        if degree == 1:
            dst, count = next(iter(matrix.rows[src].items()))
            if dst in j_core:
                sources += 1
                links += 1
                packets += count
    for dst, degree in fans.d_in.items():
        if degree == 1:
            src, count = next(iter(matrix.cols[dst].items()))
            if src in i_core:
                destinations += 1
                links += 1
                packets += count
    return CategoryStats(
        sources=sources, packets=packets, links=links, destinations=destinations
    )


def _supernode_category(
    matrix: TrafficMatrix,
    supernodes: Sequence[str],
    fans: FanVectors,
    j_core: FrozenSet[str],
    i_core: FrozenSet[str],
) -> CategoryStats:
    """The supernodes' own traffic with the core (leaf cells excluded).

    Sources/destinations count supernode identities active in each role;
    links/packets cover the cells joining a supernode to a core node on the
    other side.  Supernode-to-supernode cells are tracked separately.
    """
    sset = set(supernodes)
    links = packets = 0
    for sn in sset:
        for dst, count in matrix.rows.get(sn, {}).items():
            if dst in j_core and fans.d_out[sn] > 1:
                links += 1
                packets += count
        for src, count in matrix.cols.get(sn, {}).items():
            if src in i_core and fans.d_in[sn] > 1:
                links += 1
                packets += count
    sources = sum(1 for sn in sset if fans.d_out.get(sn, 0) > 0)
    destinations = sum(1 for sn in sset if fans.d_in.get(sn, 0) > 0)
    return CategoryStats(
        sources=sources, packets=packets, links=links, destinations=destinations
    )


def _supernode_internal(
    matrix: TrafficMatrix, supernodes: Sequence[str], fans: FanVectors
) -> CategoryStats:
    """Cells with supernodes at both ends and neither role at degree 1.

    A degree-1 role hands the cell to the isolated or leaf categories even
    between two supernodes, so only fan > 1 on both sides counts here.
    """
    sset = set(supernodes)
    row_keys: Set[str] = set()
    col_keys: Set[str] = set()
    links = packets = 0
    for sn in sset:
        for dst, count in matrix.rows.get(sn, {}).items():
            if dst in sset and fans.d_out[sn] > 1 and fans.d_in[dst] > 1:
                links += 1
                packets += count
                row_keys.add(sn)
                col_keys.add(dst)
    return CategoryStats(
        sources=len(row_keys),
        packets=packets,
        links=links,
        destinations=len(col_keys),
    )


def _fraction(part: int, whole: int) -> float:
    return part / whole if whole else 0.0


def _fractions(stats: CategoryStats, totals: AggregateSummary) -> CategoryFractions:
    return CategoryFractions(
        sources=_fraction(stats.sources, totals.unique_sources),
        packets=_fraction(stats.packets, totals.valid_packets),
        links=_fraction(stats.links, totals.unique_links),
        destinations=_fraction(stats.destinations, totals.unique_destinations),
    )


def topology_breakdown(
    matrix: TrafficMatrix,
    k: int = DEFAULT_SUPERNODE_COUNT,
    *,
    strict_core: bool = False,
) -> TopologyBreakdown:
    """Full decomposition: all categories, fractions, and the tiling residual."""
    totals = matrix.aggregates()
    if totals.valid_packets == 0:
        zero = {name: ZERO_STATS for name in CATEGORY_ORDER}
        zero_frac = {
            name: CategoryFractions(0.0, 0.0, 0.0, 0.0) for name in CATEGORY_ORDER
        }
        return TopologyBreakdown(
            categories=zero,
            supernode_ids=(),
            supernode_internal=ZERO_STATS,
            totals=totals,
            fractions=zero_frac,
            residual_packets=0,
            residual_links=0,
        )
    fans = fan_vectors(matrix)
    supers = find_supernodes(matrix, k)
    i_core, j_core = core_membership(
        matrix, supers, fans, strict_inequality=strict_core
    )
    categories = {
        "isolated_links": isolated_links(matrix, fans),
        "supernode_leaves": supernode_leaves(matrix, supers, fans),
        "supernodes": _supernode_category(matrix, supers, fans, j_core, i_core),
        "core": core_stats(matrix, i_core, j_core),
        "core_leaves": core_leaves(matrix, i_core, j_core, fans),
    }
    internal = _supernode_internal(matrix, supers, fans)
    tiled_packets = internal.packets + sum(c.packets for c in categories.values())
    tiled_links = internal.links + sum(c.links for c in categories.values())
    fractions = {name: _fractions(stats, totals) for name, stats in categories.items()}
    return TopologyBreakdown(
        categories=categories,
        supernode_ids=tuple(supers),
        supernode_internal=internal,
        totals=totals,
        fractions=fractions,
        residual_packets=totals.valid_packets - tiled_packets,
        residual_links=totals.unique_links - tiled_links,
    )


def write_topology_csv(path, breakdown: TopologyBreakdown) -> int:
    """One row per category, plus supernode-internal and residual accounting.

    Returns the number of data rows written.
    """
    totals = breakdown.totals
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TOPOLOGY_CSV_HEADER)
        for name in CATEGORY_ORDER:
            stats = breakdown.categories[name]
            frac = breakdown.fractions[name]
            writer.writerow(
                [
                    name,
                    stats.sources,
                    stats.packets,
                    stats.links,
                    stats.destinations,
                    repr(frac.sources),
                    repr(frac.packets),
                    repr(frac.links),
                    repr(frac.destinations),
                ]
            )
        internal = breakdown.supernode_internal
        writer.writerow(
            [
                "supernode_internal",
                internal.sources,
                internal.packets,
                internal.links,
                internal.destinations,
                repr(_fraction(internal.sources, totals.unique_sources)),
                repr(_fraction(internal.packets, totals.valid_packets)),
                repr(_fraction(internal.links, totals.unique_links)),
                repr(_fraction(internal.destinations, totals.unique_destinations)),
            ]
        )
        writer.writerow(
            [
                "residual",
                0,
                breakdown.residual_packets,
                breakdown.residual_links,
                0,
                repr(0.0),
                repr(_fraction(breakdown.residual_packets, totals.valid_packets)),
                repr(_fraction(breakdown.residual_links, totals.unique_links)),
                repr(0.0),
            ]
        )
    return len(CATEGORY_ORDER) + 2


def read_topology_csv(path) -> Dict[str, CategoryStats]:
    """Category rows from a topology CSV (fractions are recomputable)."""
    out: Dict[str, CategoryStats] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TOPOLOGY_CSV_HEADER:
            raise ValueError(f"unexpected topology CSV header: {header!r}")
        for row in reader:
            if row[0] == "residual":
                continue
            out[row[0]] = CategoryStats(
                sources=int(row[1]),
                packets=int(row[2]),
                links=int(row[3]),
                destinations=int(row[4]),
            )
    return out
