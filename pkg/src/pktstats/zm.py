"""Two-parameter modified Zipf-Mandelbrot model: evaluation, training, inference.

The model density is rho(d) = 1 / (d + delta)**alpha, normalized over
d = 1..d_max.  Training solves for the delta that makes the model's
degree-1 probability match a measured value, via bracketed Newton iteration
with a bisection fallback.  Inference sweeps a fixed alpha grid, trains delta
at each point, and scores candidates with a half-norm metric on log-pooled
bins, keeping the best (ties to the smaller alpha).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .netstats import PooledDistribution, bin_edges

# Ranges at most this long are summed term by term; longer ranges use an
# integral tail approximation after an exact head of this many terms.
EXACT_SUM_TERMS = 10**6

# Per-bin |log data - log model| gaps below this are float noise and score as
# an exact match; see half_norm_loss.
LOG_GAP_NOISE_FLOOR = 1e-12

TRAIN_DELTA_START = 1.0
TRAIN_DELTA_BOUNDS = (0.0, 10.0)
TRAIN_STEP_TOL = 1e-3
TRAIN_RESIDUAL_TOL = 1e-9


class InferenceError(ValueError):
    """Raised when no grid point admits a trained model."""


@dataclass(frozen=True)
class ZmParams:
    """Model parameters: exponent alpha, offset delta, support 1..d_max."""

    alpha: float
    delta: float
    d_max: int

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.delta >= 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")


@dataclass(frozen=True)
class DeltaTraining:
    """Result of training delta: the solution plus convergence diagnostics."""

    delta: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class ZmFit:
    """Best grid fit for one pooled distribution."""

    params: ZmParams
    loss: float
    leaf: float
    bins_used: int


@dataclass(frozen=True)
class AlphaGrid:
    """Uniform alpha search grid, endpoints inclusive."""

    start: float = 0.10
    stop: float = 4.00
    step: float = 0.01

    def __post_init__(self):
        if not self.start > 0.0:
            raise ValueError("grid start must be > 0")
        if not self.step > 0.0:
            raise ValueError("grid step must be > 0")
        if self.stop < self.start:
            raise ValueError("grid stop must be >= start")

    @property
    def values(self) -> Tuple[float, ...]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return tuple(round(self.start + k * self.step, 9) for k in range(n + 1))


DEFAULT_GRID = AlphaGrid()


def rho(d: int, alpha: float, delta: float) -> float:
    """Unnormalized model density at degree d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return (d + delta) ** (-alpha)


def rho_grad_delta(d: int, alpha: float, delta: float) -> float:
    """Partial derivative of rho with respect to delta."""
    return -alpha * rho(d, alpha + 1.0, delta)


def _em_tail(alpha: float, delta: float, a: int, b: int) -> float:
    """Sum of (d + delta)**-alpha for d = a..b via an integral plus endpoint
    and first-derivative corrections; accurate far from the support's start."""
    x0 = a + delta
    x1 = b + delta
    if alpha == 1.0:
        integral = math.log(x1 / x0)
    else:
        one_m = 1.0 - alpha
        # Stable through alpha -> 1: x1**c - x0**c = x0**c * expm1(c*log(x1/x0))
        integral = x0**one_m * math.expm1(one_m * math.log(x1 / x0)) / one_m
    fa = x0 ** (-alpha)
    fb = x1 ** (-alpha)
    dfa = -alpha * x0 ** (-alpha - 1.0)
    dfb = -alpha * x1 ** (-alpha - 1.0)
    return integral + 0.5 * (fa + fb) + (dfb - dfa) / 12.0


def _range_rho_sum(
    alpha: float, delta: float, lo: int, hi: int, exact_terms: int = EXACT_SUM_TERMS
) -> float:
    """Sum of (d + delta)**-alpha over integer d in (lo, hi]."""
    n = hi - lo
    if n <= 0:
        return 0.0
    if n <= exact_terms:
        base = np.arange(lo + 1.0, hi + 1.0) + delta
        return float(np.sum(base ** (-alpha)))
    head_hi = lo + exact_terms
    base = np.arange(lo + 1.0, head_hi + 1.0) + delta
    head = float(np.sum(base ** (-alpha)))
    return head + _em_tail(alpha, delta, head_hi + 1, hi)


def rho_sum(params: ZmParams, exact_terms: int = EXACT_SUM_TERMS) -> float:
    """Normalization sum of rho over d = 1..d_max."""
    return _range_rho_sum(params.alpha, params.delta, 0, params.d_max, exact_terms)


def _binned_rho_sums(
    alpha: float, delta: float, d_max: int, exact_terms: int = EXACT_SUM_TERMS
) -> List[float]:
    """Per-bin rho mass over the power-of-two bins covering 1..d_max."""
    sums = []
    lo = 0
    for edge in bin_edges(d_max):
        hi = min(edge, d_max)
        sums.append(_range_rho_sum(alpha, delta, lo, hi, exact_terms))
        lo = hi
    return sums


def model_distribution(
    params: ZmParams, exact_terms: int = EXACT_SUM_TERMS
) -> PooledDistribution:
    """The model's log-pooled distribution on the bins covering 1..d_max."""
    sums = _binned_rho_sums(params.alpha, params.delta, params.d_max, exact_terms)
    total = math.fsum(sums)
    values = tuple(s / total for s in sums)
    edges = bin_edges(params.d_max)
    return PooledDistribution(
        bin_edges=edges,
        values=values,
        sigmas=(0.0,) * len(edges),
        n_windows=1,
        d_max=params.d_max,
    )


def leaf_parameter(params: ZmParams) -> float:
    """The model's unnormalized degree-1 density, 1 / (1 + delta)**alpha."""
    return (1.0 + params.delta) ** (-params.alpha)


def _newton_sums(
    alpha: float, delta: float, d_max: int, exact_terms: int
) -> Tuple[float, float]:
    """Normalization sums at exponents alpha and alpha + 1 (shared base)."""
    if d_max <= exact_terms:
        base = np.arange(1.0, d_max + 1.0) + delta
        r0 = base ** (-alpha)
        return float(np.sum(r0)), float(np.sum(r0 / base))
    s0 = _range_rho_sum(alpha, delta, 0, d_max, exact_terms)
    s1 = _range_rho_sum(alpha + 1.0, delta, 0, d_max, exact_terms)
    return s0, s1


def train_delta(
    d1: float,
    alpha: float,
    d_max: int,
    *,
    tol: float = TRAIN_STEP_TOL,
    residual_tol: float = TRAIN_RESIDUAL_TOL,
    max_iterations: int = 200,
    exact_terms: int = EXACT_SUM_TERMS,
) -> Optional[DeltaTraining]:
    """Solve for the delta whose model matches degree-1 probability d1.

    Root-finds f(delta) = d1 * (1 + delta)**alpha * S(delta) - 1 (strictly
    increasing in delta) by Newton steps inside a sign bracket on (0, 10),
    bisecting whenever a step leaves the bracket.  Returns None when no
    interior root exists.  After convergence, the solution is refined until
    the model's pooled degree-1 value reproduces d1 as closely as float64
    allows (exactly, when an exact match exists).
    """
    if not 0.0 < d1 < 1.0:
        raise ValueError(f"d1 must be in (0, 1), got {d1}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if d_max < 1:
        raise ValueError(f"d_max must be >= 1, got {d_max}")

    lo, hi = TRAIN_DELTA_BOUNDS

    def f_and_grad(delta: float) -> Tuple[float, float]:
        s0, s1 = _newton_sums(alpha, delta, d_max, exact_terms)
        scale = d1 * (1.0 + delta) ** alpha
        f = scale * s0 - 1.0
        grad = alpha * scale * (s0 / (1.0 + delta) - s1)
        return f, grad

    f_lo, _ = f_and_grad(lo)
    if f_lo >= 0.0:
        return None  # matching delta would sit at or below the lower bound
    f_hi, _ = f_and_grad(hi)
    if f_hi <= 0.0:
        return None  # matching delta would sit at or beyond the upper bound

    delta = TRAIN_DELTA_START
    iterations = 0
    last_step = math.inf
    fval, grad = f_and_grad(delta)
    for _ in range(max_iterations):
        if fval < 0.0:
            lo = delta
        elif fval > 0.0:
            hi = delta
        else:
            break
        if last_step < tol and abs(fval) < residual_tol:
            break
        candidate = delta - fval / grad if grad > 0.0 else 0.5 * (lo + hi)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        last_step = abs(candidate - delta)
        delta = candidate
        iterations += 1
        fval, grad = f_and_grad(delta)

    # Refinement: push the residual down to float noise with further Newton
    # steps (quadratic tail), keeping only strict improvements.
    for _ in range(12):
        if fval == 0.0 or grad <= 0.0:
            break
        candidate = delta - fval / grad
        if candidate == delta or not lo < candidate < hi:
            break
        new_f, new_grad = f_and_grad(candidate)
        if abs(new_f) < abs(fval):
            delta, fval, grad = candidate, new_f, new_grad
        else:
            break

    delta = _ulp_match(d1, alpha, d_max, delta, exact_terms)
    residual, _ = f_and_grad(delta)
    return DeltaTraining(delta=delta, iterations=iterations, residual=abs(residual))


def _ulp_match(
    d1: float, alpha: float, d_max: int, delta: float, exact_terms: int
) -> float:
    """Walk delta by ulps so the binned model's D(1) best reproduces d1.

    Uses the same binned-sum code path as model_distribution, so an exact
    float match is found whenever one exists (e.g. d1 generated by the model).
    """

    def gap(dd: float) -> float:
        sums = _binned_rho_sums(alpha, dd, d_max, exact_terms)
        return sums[0] / math.fsum(sums) - d1

    lo, hi = TRAIN_DELTA_BOUNDS
    best_delta = delta
    best_abs = abs(gap(delta))
    prev_sign = None
    current = delta
    for _ in range(32):
        if best_abs == 0.0:
            break
        g = gap(current)
        sign = g > 0.0
        if abs(g) < best_abs:
            best_abs, best_delta = abs(g), current
        if prev_sign is not None and sign != prev_sign and g != 0.0:
            break  # crossed the root without an exact zero
        prev_sign = sign
        # D(1) decreases as delta grows, so walk toward the sign of the gap.
        nxt = math.nextafter(current, hi if g > 0.0 else lo)
        if not lo < nxt < hi or nxt == current:
            break
        current = nxt
    if best_abs == 0.0:
        # Prefer the smallest float in a zero plateau, deterministically.
        for _ in range(4):
            down = math.nextafter(best_delta, lo)
            if not lo < down < hi or gap(down) != 0.0:
                break
            best_delta = down
    return best_delta


def admissible_bins(data: PooledDistribution) -> Tuple[int, ...]:
    """Indices of bins that may enter the loss: value above sigma and nonzero."""
    return tuple(
        i
        for i, (value, sigma) in enumerate(zip(data.values, data.sigmas))
        if value > sigma and value > 0.0
    )


def half_norm_loss(
    data: PooledDistribution,
    model: PooledDistribution,
    *,
    noise_floor: float = LOG_GAP_NOISE_FLOOR,
) -> float:
    """Sum of sqrt(|log data - log model|) over admissible bins.

    Gaps below the noise floor count as exact matches: the square root would
    otherwise amplify sub-ulp float disagreements into spurious loss.
    """
    if data.bin_edges != model.bin_edges:
        raise ValueError("data and model bins are not aligned")
    indexes = admissible_bins(data)
    if not indexes:
        raise ValueError("no admissible bins")
    loss = 0.0
    for i in indexes:
        model_value = model.values[i]
        if model_value <= 0.0:
            return math.inf
        gap = abs(math.log(data.values[i]) - math.log(model_value))
        if gap < noise_floor:
            gap = 0.0
        loss += math.sqrt(gap)
    return loss


def infer_parameters(
    data: PooledDistribution,
    grid: AlphaGrid = DEFAULT_GRID,
    *,
    exact_terms: int = EXACT_SUM_TERMS,
) -> ZmFit:
    """Grid search over alpha with per-alpha delta training.

    Every grid alpha is trained to match the data's degree-1 value; candidates
    are scored by half_norm_loss and the smallest loss wins, ties going to the
    smaller alpha.  Raises InferenceError when the data is degenerate or no
    grid point can be trained.
    """
    d1 = data.values[0]
    if not 0.0 < d1 < 1.0:
        raise InferenceError(f"degree-1 mass must be in (0, 1), got {d1}")
    if not admissible_bins(data):
        raise InferenceError("no admissible bins to fit")
    d_max = data.d_max
    best: Optional[ZmFit] = None
    for alpha in grid.values:
        trained = train_delta(d1, alpha, d_max, exact_terms=exact_terms)
        if trained is None:
            continue
        params = ZmParams(alpha=alpha, delta=trained.delta, d_max=d_max)
        loss = half_norm_loss(data, model_distribution(params, exact_terms))
        if best is None or loss < best.loss:
            best = ZmFit(
                params=params,
                loss=loss,
                leaf=leaf_parameter(params),
                bins_used=len(admissible_bins(data)),
            )
    if best is None:
        raise InferenceError("no grid alpha admitted a trained delta")
    return best


def fit_payload(fit: ZmFit, grid: AlphaGrid, **meta) -> Dict:
    """JSON-ready fit description; extra metadata keys are included if set."""
    payload = {
        "alpha": fit.params.alpha,
        "delta": fit.params.delta,
        "loss": fit.loss,
        "leaf": fit.leaf,
        "d_max": fit.params.d_max,
        "bins_used": fit.bins_used,
        "grid": {"start": grid.start, "stop": grid.stop, "step": grid.step},
    }
    payload.update({key: value for key, value in meta.items() if value is not None})
    return payload


def failure_payload(message: str, grid: AlphaGrid, **meta) -> Dict:
    payload = {
        "error": message,
        "grid": {"start": grid.start, "stop": grid.stop, "step": grid.step},
    }
    payload.update({key: value for key, value in meta.items() if value is not None})
    return payload


def write_fit_json(path, payload: Dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
