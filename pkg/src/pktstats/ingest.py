"""Packet-record ingest: CSV parsing, validity filtering, and fixed-size windowing.

A packet stream is a sequence of records ``(timestamp_us, src, dst, protocol,
ip_version)``.  Only TCP-over-IPv4 records are *valid*; windowing groups every
``n_valid`` consecutive valid records into an immutable window, skipping (but
counting) invalid ones.  A trailing partial window is discarded.
"""

from __future__ import annotations

import gzip
import ipaddress
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, Optional

PROTOCOLS = frozenset({"TCP", "UDP", "ICMP", "OTHER"})
IP_VERSIONS = frozenset({4, 6})

CANONICAL_FIELDS = ("timestamp", "src", "dst", "protocol", "ip_version")


class PacketParseError(ValueError):
    """A packet CSV line that cannot be turned into a record."""

    def __init__(self, message: str, line_number: int = 0):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class PacketRecord(NamedTuple):
    """One observed packet.

    Index layout (0..4) is part of the contract: bulk producers may emit plain
    tuples with the same field order, and hot paths access fields by index.
    """

    timestamp: int
    src: str
    dst: str
    protocol: str
    ip_version: int


@dataclass(frozen=True)
class FormatSpec:
    """Column layout of a packet CSV file."""

    fields: tuple = CANONICAL_FIELDS
    header: bool = False

    def __post_init__(self):
        if sorted(self.fields) != sorted(CANONICAL_FIELDS):
            raise ValueError(f"fields must be a permutation of {CANONICAL_FIELDS}")


CANONICAL_FORMAT = FormatSpec()


@dataclass
class IngestSummary:
    """Counters accumulated while consuming a stream."""

    total_read: int = 0
    total_valid: int = 0
    total_skipped: int = 0


@dataclass(frozen=True)
class PacketWindow:
    """Exactly ``n_valid`` consecutive valid packets, immutable once built."""

    index: int
    records: tuple
    n_valid: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("window index must be >= 0")
        if self.n_valid < 1:
            raise ValueError("n_valid must be >= 1")
        if len(self.records) != self.n_valid:
            raise ValueError(
                f"window holds {len(self.records)} records, expected {self.n_valid}"
            )


@lru_cache(maxsize=1 << 16)
def _is_address(text: str) -> bool:
    try:
        ipaddress.ip_address(text)
    except ValueError:
        return False
    return True


def parse_packet_line(
    line: str, line_number: int = 0, fmt: FormatSpec = CANONICAL_FORMAT
) -> PacketRecord:
    """Parse one CSV line into a PacketRecord.

    Raises PacketParseError on wrong field count, malformed timestamp or
    addresses, unknown protocol, or unknown IP version.
    """
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != len(CANONICAL_FIELDS):
        raise PacketParseError(
            f"expected {len(CANONICAL_FIELDS)} fields, got {len(parts)}", line_number
        )
    by_name = dict(zip(fmt.fields, parts))
    raw_ts = by_name["timestamp"]
    try:
        timestamp = int(raw_ts)
    except ValueError:
        raise PacketParseError(f"bad timestamp {raw_ts!r}", line_number) from None
    if timestamp < 0:
        raise PacketParseError(f"negative timestamp {timestamp}", line_number)
    src = by_name["src"]
    dst = by_name["dst"]
    for label, addr in (("src", src), ("dst", dst)):
        if not addr or not _is_address(addr):
            raise PacketParseError(f"invalid {label} address {addr!r}", line_number)
    protocol = by_name["protocol"]
    if protocol not in PROTOCOLS:
        raise PacketParseError(f"unknown protocol {protocol!r}", line_number)
    raw_ver = by_name["ip_version"]
    try:
        ip_version = int(raw_ver)
    except ValueError:
        raise PacketParseError(f"bad ip_version {raw_ver!r}", line_number) from None
    if ip_version not in IP_VERSIONS:
        raise PacketParseError(f"unknown ip_version {ip_version}", line_number)
    return PacketRecord(timestamp, src, dst, protocol, ip_version)


def is_valid_packet(record) -> bool:
    """A packet enters windows iff it is TCP over IPv4."""
    return record[3] == "TCP" and record[4] == 4


def read_packet_csv(path, fmt: FormatSpec = CANONICAL_FORMAT) -> Iterator[PacketRecord]:
    """Stream records from a packet CSV file (gzip-transparent by suffix)."""
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        lines = iter(enumerate(fh, 1))
        if fmt.header:
            next(lines, None)
        for line_number, line in lines:
            yield parse_packet_line(line, line_number, fmt)


def next_window(
    stream: Iterable,
    n_valid: int,
    *,
    index: int = 0,
    summary: Optional[IngestSummary] = None,
) -> Optional[PacketWindow]:
    """Consume the stream until one complete window is filled.

    Returns None when the stream ends first (the partial batch is discarded;
    its records still count in the summary).
    """
    if n_valid < 1:
        raise ValueError("n_valid must be >= 1")
    batch: list = []
    append = batch.append
    if summary is None:
        for record in stream:
            if record[3] == "TCP" and record[4] == 4:
                append(record)
                if len(batch) == n_valid:
                    return PacketWindow(index, tuple(batch), n_valid)
        return None
    for record in stream:
        summary.total_read += 1
        if record[3] == "TCP" and record[4] == 4:
            summary.total_valid += 1
            append(record)
            if len(batch) == n_valid:
                return PacketWindow(index, tuple(batch), n_valid)
        else:
            summary.total_skipped += 1
    return None


def iter_windows(
    stream: Iterable,
    n_valid: int,
    summary: Optional[IngestSummary] = None,
) -> Iterator[PacketWindow]:
    """Yield every complete window of the stream in order."""
    it = iter(stream)
    index = 0
    while True:
        window = next_window(it, n_valid, index=index, summary=summary)
        if window is None:
            return
        yield window
        index += 1
