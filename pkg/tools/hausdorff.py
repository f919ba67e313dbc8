"""
Lorentzian Hausdorff Measure
ω_N, diamond volumes, the covering volume v(p, d, n, k) of the unit diamond under
tilted and symmetric splits, its limit in n, and the dimension and measure
estimates of Cyl^p built on top of it.
"""

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from scipy.special import gammaln

from tools.core import P_INF, PValue, DEFAULT_CIRCUMFERENCE, DEFAULT_HEIGHT, format_p, format_real, parse_p
from tools.errors import InconclusiveError, PreconditionError

LOGGER = logging.getLogger(__name__)

LOG2 = math.log(2.0)
INFINITE_THRESHOLD = 1e6
ZERO_THRESHOLD = 1e-6
DEFAULT_LIMIT_TOLERANCE = 1e-12
LIMIT_ITERATION_CAP = 1000
STABLE_STEPS = 3
SLOPE_FLOOR = 1e-9
DIMENSION_BRACKET = (0.5, 4.0)
BISECTION_STEPS = 40
MIN_LEVELS = 4


class Classification(enum.Enum):
    ZERO = "zero"
    FINITE = "finite"
    INFINITE = "infinite"


class SchemeKind(enum.Enum):
    TILTED_SPLIT = "tiltedSplit"
    SYMMETRIC_SPLIT = "symmetricSplit"


@dataclass(frozen=True)
class CoveringScheme:
    """n tilted diamonds inside each of the (2^levels per side) symmetric pieces."""
    kind: SchemeKind
    n: int = 1
    levels: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"tilted split needs n >= 1, got {self.n}")
        if self.levels < 0:
            raise PreconditionError(f"symmetric split needs levels >= 0, got {self.levels}")

    @property
    def k(self) -> int:
        return 2 ** self.levels

    def volume(self, p, d: float) -> float:
        return covering_volume_v(p, d, self.n, self.k)


@dataclass
class LimitClassification:
    kind: Classification
    value: Optional[float] = None
    iterations: int = 0
    scheme: Dict[str, Any] = field(default_factory=dict)

    def describe(self) -> str:
        if self.kind is Classification.FINITE:
            return f"finite({format_real(self.value)})"
        return self.kind.value


def omega_n(dimension: float) -> float:
    """ω_N = π^{(N−1)/2} / (N Γ((N+1)/2) 2^{N−1})."""
    if not dimension > 0:
        raise PreconditionError(f"N must be positive, got {dimension}")
    log_value = ((dimension - 1) / 2 * math.log(math.pi) - math.log(dimension)
                 - float(gammaln((dimension + 1) / 2)) - (dimension - 1) * LOG2)
    return math.exp(log_value)


def diamond_volume(dimension: float, tau_pq: float) -> float:
    """ρ_N(J(p,q)) = ω_N τ(p,q)^N."""
    if tau_pq < 0:
        raise PreconditionError(f"τ must be non-negative, got {tau_pq}")
    if tau_pq == 0:
        return 0.0
    return omega_n(dimension) * tau_pq ** dimension


def _log_expm1(x: float) -> float:
    return x + math.log1p(-math.exp(-x)) if x > 1 else math.log(math.expm1(x))


def _log_bracket(p: PValue, d: float, a: float) -> float:
    """log of ((a/2 + 1/2)^p − (1/2 − a/2)^p)^{d/p} with a = 1/n, free of cancellation."""
    if a == 1.0:
        return 0.0
    if p is P_INF:
        return d * (math.log1p(a) - LOG2)
    return (d / p) * (-p * LOG2 + p * math.log1p(-a) + _log_expm1(2 * p * math.atanh(a)))


def _log_v(p: PValue, d: float, j: int, log_k: float = 0.0) -> float:
    """log v(p, d, 2^j, k)."""
    return j * LOG2 + (2 - d) * log_k + _log_bracket(p, d, math.ldexp(1.0, -j))


def _check_pd(p, d: float) -> PValue:
    p = parse_p(p)
    if not d > 0:
        raise PreconditionError(f"d must be positive, got {d}")
    return p


def covering_volume_v(p, d: float, n: int, k: int) -> float:
    """
    v(p, d, n, k) = n (1/k)^{d−2} ((1/(2n) + 1/2)^p − (1/2 − 1/(2n))^p)^{d/p}.

    Args:
        p: exponent of τ^p
        d: trial dimension
        n: number of tilted diamonds
        k: symmetric subdivisions per side

    Returns:
        The covering volume of the unit diamond
    """
    p = _check_pd(p, d)
    if n < 1 or k < 1:
        raise PreconditionError(f"n and k must be at least 1, got n={n}, k={k}")
    log_value = math.log(n) + (2 - d) * math.log(k) + _log_bracket(p, d, 1.0 / n)
    return math.exp(log_value) if log_value < 709 else math.inf


def v_limit_in_n(p, d: float, k: int = 1, tolerance: float = DEFAULT_LIMIT_TOLERANCE,
                 max_iterations: int = LIMIT_ITERATION_CAP) -> LimitClassification:
    """
    Classify lim_{n→∞} v(p, d, n, k) along n = 2^j.

    infinite: above 1e6, increasing, and at least doubled since j//2.
    zero: below 1e-6, decreasing, and at most half of the value at j//2.
    finite: three consecutive steps within tolerance.
    """
    p = _check_pd(p, d)
    if k < 1:
        raise PreconditionError(f"k must be at least 1, got {k}")
    log_k = math.log(k)
    logs = [_log_v(p, d, 0, log_k)]
    stable = 0
    for j in range(1, max_iterations + 1):
        current = _log_v(p, d, j, log_k)
        logs.append(current)
        previous, halfway = logs[j - 1], logs[j // 2]
        if current > math.log(INFINITE_THRESHOLD) and current > previous and current >= halfway + LOG2:
            LOGGER.debug("v(p=%s, d=%s) diverges by j=%d", format_p(p), d, j)
            return LimitClassification(Classification.INFINITE, iterations=j)
        if current < math.log(ZERO_THRESHOLD) and current < previous and current <= halfway - LOG2:
            LOGGER.debug("v(p=%s, d=%s) vanishes by j=%d", format_p(p), d, j)
            return LimitClassification(Classification.ZERO, iterations=j)
        value, before = math.exp(current), math.exp(previous)
        stable = stable + 1 if abs(value - before) <= tolerance * max(1.0, abs(value)) else 0
        if stable >= STABLE_STEPS:
            return LimitClassification(Classification.FINITE, value=value, iterations=j)
    raise InconclusiveError(
        f"no trend for v(p={format_p(p)}, d={d}, n, k={k}) within {max_iterations} doublings",
        details={"last_log_value": logs[-1], "iterations": max_iterations},
    )


def _check_levels(max_levels: int) -> None:
    if max_levels < MIN_LEVELS:
        raise PreconditionError(f"maxLevels must be at least {MIN_LEVELS}, got {max_levels}")


def _classify_measure(p: PValue, d: float, max_levels: int) -> LimitClassification:
    """
    Unit-diamond measure at trial dimension d.

    If tilted splitting still lowers the volume at the finest level the infimum is 0.
    Otherwise the δ constraint forces symmetric refinement, whose factor k^{2−d}
    decides between 0, a finite value and ∞.
    """
    slope_n = _log_v(p, d, max_levels) - _log_v(p, d, max_levels - 1)
    if slope_n < -SLOPE_FLOOR:
        return LimitClassification(Classification.ZERO, iterations=max_levels,
                                   scheme={"scheme": SchemeKind.TILTED_SPLIT.value, "n": 2 ** max_levels})
    logs = [_log_v(p, d, j) for j in range(max_levels + 1)]
    best = min(range(len(logs)), key=logs.__getitem__)
    scheme = {"scheme": SchemeKind.SYMMETRIC_SPLIT.value, "n": 2 ** best, "levels": max_levels}
    slope_k = (2 - d) * LOG2
    if slope_k > SLOPE_FLOOR:
        return LimitClassification(Classification.INFINITE, iterations=max_levels, scheme=scheme)
    if slope_k < -SLOPE_FLOOR:
        return LimitClassification(Classification.ZERO, iterations=max_levels, scheme=scheme)
    return LimitClassification(Classification.FINITE, value=math.exp(logs[best]),
                               iterations=max_levels, scheme=scheme)


def measure_estimate(p, d: float, max_levels: int = 20) -> LimitClassification:
    """ν^d of the unit diamond of Cyl^p, per unit diamond, with the scheme that attains it."""
    p = _check_pd(p, d)
    if p is P_INF:
        raise PreconditionError("the measure estimate needs a finite exponent")
    _check_levels(max_levels)
    result = _classify_measure(p, d, max_levels)
    LOGGER.debug("measure p=%s d=%s: %s", format_p(p), d, result.describe())
    return result


def dimension_estimate(p, max_levels: int = 20) -> float:
    """
    Bisect d over [0.5, 4] for the point where the measure stops being infinite.

    Returns:
        The upper end of the final bracket
    """
    p = parse_p(p)
    if p is P_INF:
        raise PreconditionError("dimension estimates need a finite p")
    _check_levels(max_levels)
    lo, hi = DIMENSION_BRACKET
    low_kind = _classify_measure(p, lo, max_levels).kind
    high_kind = _classify_measure(p, hi, max_levels).kind
    if low_kind is not Classification.INFINITE or high_kind is Classification.INFINITE:
        raise InconclusiveError(
            "measure classification does not bracket a dimension on [0.5, 4]",
            details={"p": format_p(p), "low": low_kind.value, "high": high_kind.value},
        )
    for step in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _classify_measure(p, mid, max_levels).kind is Classification.INFINITE:
            lo = mid
        else:
            hi = mid
        LOGGER.debug("bisection step %d: [%s, %s]", step, lo, hi)
    return hi


def nu_delta_estimate(p, d: float, k_level: int, max_levels: int = 20) -> float:
    """inf of v(p, d, 2^j, 2^m) over m ≥ k_level and 0 ≤ j ≤ maxLevels; nondecreasing in k_level."""
    p = _check_pd(p, d)
    _check_levels(max_levels)
    if not 0 <= k_level <= max_levels:
        raise PreconditionError(f"kLevel must lie in [0, {max_levels}], got {k_level}")
    best = min(
        _log_v(p, d, j, m * LOG2)
        for m in range(k_level, max_levels + 1)
        for j in range(max_levels + 1)
    )
    return math.exp(best)


def cylinder_measure_estimate(p, d: float, height: float = DEFAULT_HEIGHT,
                              circumference: float = DEFAULT_CIRCUMFERENCE,
                              max_levels: int = 20) -> LimitClassification:
    """
    ν^d(Cyl^p) by finite additivity: 2C/h diamonds of time diagonal h, each worth
    ω_d h^d times the unit-diamond value.
    """
    if not (height > 0 and circumference > 0):
        raise PreconditionError("height and circumference must be positive")
    unit = measure_estimate(p, d, max_levels)
    if unit.kind is not Classification.FINITE:
        return unit
    diamonds = 2 * circumference / height
    total = unit.value * omega_n(d) * diamonds * height ** d
    scheme = dict(unit.scheme, diamonds=diamonds)
    return LimitClassification(Classification.FINITE, total, unit.iterations, scheme)


@dataclass(frozen=True)
class HausdorffRow:
    p: PValue
    d: float
    scheme: CoveringScheme
    volume: float
    classification: str


def covering_table(p, d: float, max_levels: int = 20) -> List[HausdorffRow]:
    """Tilted rows n = 2^j and symmetric rows k = 2^m, each tagged with the measure classification."""
    p = _check_pd(p, d)
    _check_levels(max_levels)
    label = measure_estimate(p, d, max_levels).describe()
    schemes = [CoveringScheme(SchemeKind.TILTED_SPLIT, n=2 ** j) for j in range(max_levels + 1)]
    schemes += [CoveringScheme(SchemeKind.SYMMETRIC_SPLIT, levels=m) for m in range(max_levels + 1)]
    return [HausdorffRow(p, d, s, s.volume(p, d), label) for s in schemes]


def table_to_csv(rows: List[HausdorffRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["p", "d", "scheme", "n", "levels", "volume_estimate", "classification"])
    for row in rows:
        writer.writerow([format_p(row.p), format_real(row.d), row.scheme.kind.value, row.scheme.n,
                         row.scheme.levels, format_real(row.volume), row.classification])
    return buffer.getvalue()
