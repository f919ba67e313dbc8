"""
Curvature Bound Certificates
The λ-scaling median defect of the homogeneous example spaces, its fitted scaling
exponent, a grid search for parallelogram-law witnesses, and finite-λ certificates
that a space violates a sectional curvature bound k.
"""

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from tools.comparison import (
    Signature,
    TriangleSides,
    _median_closed_form,
    comparison_median,
    lorentz_comparison_median,
    median_expansion_coefficients,
)
from tools.core import P_INF, SpaceDescriptor, SpaceKind, format_real
from tools.errors import DomainError, PreconditionError
from tools.lp_spaces import (
    LorentzVector,
    check_future_quadruple,
    lorentz_norm_array,
    space_norm,
    spatial_deltas,
)

LOGGER = logging.getLogger(__name__)

DEFECT_FLOOR = 1e-13
# kept defects must exceed this many ulps of the median they are taken from
DEFECT_ULPS = 64
CERTIFICATE_MARGIN = 10.0
CERTIFICATE_LEVELS = 3
WITNESS_RELATIVE_FLOOR = 1e-9
GRID_STEP = 0.25
DEFAULT_LAMBDA_FIRST = 1
DEFAULT_LAMBDA_LAST = 20
MIN_PROFILE_POINTS = 6

EPS = np.finfo(float).eps


class FittedSign(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO = "zero"


class Verdict(enum.Enum):
    VIOLATES_LOWER = "violatesLowerBound"
    VIOLATES_UPPER = "violatesUpperBound"
    CONSISTENT = "consistent"


@dataclass
class DefectProfile:
    lambdas: List[float]
    defects: List[float]
    comparison_medians: List[float]
    space_medians: List[float]
    fitted_exponent: float
    fitted_sign: FittedSign

    @property
    def is_zero(self) -> bool:
        return self.fitted_sign is FittedSign.ZERO

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["lambda", "defect", "comparison_median", "space_median"])
        for row in zip(self.lambdas, self.defects, self.comparison_medians, self.space_medians):
            writer.writerow([format_real(v) for v in row])
        return buffer.getvalue()


@dataclass(frozen=True)
class QuadrupleWitness:
    x: LorentzVector
    y: LorentzVector
    defect: float


@dataclass
class SweepRow:
    lam: float
    space_median: float
    flat_median: float
    comparison: float

    @property
    def defect(self) -> float:
        return self.space_median - self.flat_median

    @property
    def difference(self) -> float:
        return self.space_median - self.comparison

    @property
    def error(self) -> float:
        return 16 * EPS * (abs(self.space_median) + abs(self.comparison))


@dataclass
class BoundCertificate:
    """Verdicts for the pair (x, y) and for (u, v) = (½(x+y), ½(x−y))."""
    verdict: Verdict
    swapped_verdict: Verdict
    k_probe: float
    margins: List[Tuple[float, float, float]] = field(default_factory=list)
    swapped_margins: List[Tuple[float, float, float]] = field(default_factory=list)
    levels_used: int = 0
    swapped_levels_used: int = 0

    @property
    def violation(self) -> Optional[Verdict]:
        for verdict in (self.verdict, self.swapped_verdict):
            if verdict is not Verdict.CONSISTENT:
                return verdict
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_probe": self.k_probe,
            "verdict": self.verdict.value,
            "swapped_verdict": self.swapped_verdict.value,
            "levels_used": self.levels_used,
            "swapped_levels_used": self.swapped_levels_used,
            "margins": [list(m) for m in self.margins],
            "swapped_margins": [list(m) for m in self.swapped_margins],
        }


def dyadic_grid(first: int = DEFAULT_LAMBDA_FIRST, last: int = DEFAULT_LAMBDA_LAST) -> List[float]:
    """[2^-first, ..., 2^-last], strictly decreasing."""
    if first < 0 or last < first:
        raise PreconditionError(f"dyadic grid needs 0 <= first <= last, got ({first}, {last})")
    return [math.ldexp(1.0, -level) for level in range(first, last + 1)]


def _is_dyadic(value: float) -> bool:
    mantissa, _ = math.frexp(value)
    return mantissa == 0.5


def validate_lambda_grid(lambdas: Sequence[float], min_points: int = MIN_PROFILE_POINTS) -> List[float]:
    grid = [float(lam) for lam in lambdas]
    if len(grid) < min_points:
        raise PreconditionError(f"λ-grid needs at least {min_points} points, got {len(grid)}")
    if any(not 0 < lam <= 1 for lam in grid):
        raise PreconditionError("λ values must lie in (0, 1]")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("λ-grid must be strictly decreasing")
    if not all(_is_dyadic(lam) for lam in grid):
        raise PreconditionError("λ-grid must consist of powers of two")
    return grid


def _mode_of(space: SpaceDescriptor) -> Signature:
    if space.is_lorentzian:
        return Signature.LORENTZ
    if space.kind is SpaceKind.NORMED_PLANE:
        return Signature.RIEMANN
    raise PreconditionError("median defects are defined on the plane, cylinder and normed plane")


def _triangle_sides(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector) -> TriangleSides:
    """Sides of the triangle 0, x, y; for the lorentzian triangle 0 ≪ y ≪ x the long side is τ(0, x)."""
    if space.is_lorentzian:
        return TriangleSides(space_norm(space, y), space_norm(space, x), space_norm(space, x - y),
                             Signature.LORENTZ)
    return TriangleSides(space_norm(space, x), space_norm(space, y), space_norm(space, x - y))


def _check_pair(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector) -> None:
    if space.is_lorentzian:
        check_future_quadruple(space, x, y)
    elif x.v0 * y.v1 - x.v1 * y.v0 == 0:
        raise PreconditionError("x and y must be linearly independent")


def _medians(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector, lam: float) -> Tuple[float, float, TriangleSides]:
    if not 0 < lam <= 1:
        raise PreconditionError(f"λ must lie in (0, 1], got {lam}")
    x_lam, y_lam = x.scaled(lam), y.scaled(lam)
    _check_pair(space, x_lam, y_lam)
    sides = _triangle_sides(space, x_lam, y_lam)
    space_median = space_norm(space, (x_lam + y_lam).scaled(0.5))
    if sides.signature is Signature.LORENTZ:
        flat = lorentz_comparison_median(sides)
    else:
        flat = comparison_median(sides, 0.0)
    return space_median, flat, sides


def median_defect(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector, lam: float) -> float:
    """
    ε_λ = m(λ·triangle) − c1·λ for the triangle a = 0, b = x, c = y with M = ½(x+y).

    m is the space's own value at M and c1·λ the flat comparison median of the
    triangle's side values at scale λ.
    """
    _mode_of(space)
    space_median, flat, _ = _medians(space, x, y, lam)
    return space_median - flat


def _fit(lambdas: List[float], defects: List[float], space_medians: List[float]) -> Tuple[float, FittedSign]:
    kept = [
        (lam, d) for lam, d, m in zip(lambdas, defects, space_medians)
        if abs(d) > DEFECT_FLOOR and abs(d) > DEFECT_ULPS * EPS * abs(m)
    ]
    if len(kept) < 2:
        return math.nan, FittedSign.ZERO
    log_lam = np.log([lam for lam, _ in kept])
    log_def = np.log([abs(d) for _, d in kept])
    slope = float(np.polyfit(log_lam, log_def, 1)[0])
    sign = FittedSign.POSITIVE if kept[-1][1] > 0 else FittedSign.NEGATIVE
    return slope, sign


def scaling_exponent(space: SpaceDescriptor, lambdas: Sequence[float],
                     x: Optional[LorentzVector] = None, y: Optional[LorentzVector] = None,
                     sides: Optional[TriangleSides] = None) -> DefectProfile:
    """
    Fit log|defect| against log λ.

    Plane, cylinder and normed plane take the pair x, y; the sphere takes triangle
    sides and uses its comparison median minus the flat median as the defect.
    """
    grid = validate_lambda_grid(lambdas)
    defects: List[float] = []
    flats: List[float] = []
    medians: List[float] = []
    if space.kind is SpaceKind.SPHERE:
        if sides is None:
            raise PreconditionError("a sphere profile needs triangle sides")
        c1, _ = median_expansion_coefficients(sides, space.k)
        for lam in grid:
            median = comparison_median(sides.scaled(lam), space.k)
            flats.append(c1 * lam)
            medians.append(median)
            defects.append(median - c1 * lam)
    else:
        if x is None or y is None:
            raise PreconditionError("a plane or cylinder profile needs the pair x, y")
        _mode_of(space)
        for lam in grid:
            median, flat, _ = _medians(space, x, y, lam)
            flats.append(flat)
            medians.append(median)
            defects.append(median - flat)
    exponent, sign = _fit(grid, defects, medians)
    LOGGER.debug("profile on %s: exponent %s sign %s", space.kind.value, exponent, sign.value)
    return DefectProfile(grid, defects, flats, medians, exponent, sign)


def _grid_candidates(grid_radius: float) -> np.ndarray:
    """All (t, x) with step ¼, 0 < t ≤ R and |x| < t."""
    steps = int(math.floor(grid_radius / GRID_STEP))
    if steps < 1:
        raise PreconditionError(f"grid radius must be at least {GRID_STEP}, got {grid_radius}")
    values = GRID_STEP * np.arange(-steps, steps + 1)
    t, x = np.meshgrid(values[values > 0], values, indexing="ij")
    mask = np.abs(x) < t
    return np.column_stack([t[mask], x[mask]])


def quadruple_search(space: SpaceDescriptor, grid_radius: float = 2.0) -> Optional[QuadrupleWitness]:
    """
    Scan grid pairs x, y with x, y, x+y, x−y ≫ 0 for the largest |E(x, y)|.

    Returns:
        QuadrupleWitness, or None when no pair breaks the parallelogram law beyond
        relative rounding (the flat case p = 2)
    """
    if not space.is_lorentzian:
        raise PreconditionError("quadruple search runs on the lorentzian plane or cylinder")
    if space.p is P_INF:
        raise PreconditionError("quadruple search needs a finite exponent")
    candidates = _grid_candidates(grid_radius)
    xs = candidates[:, None, :]
    ys = candidates[None, :, :]
    combos = {"x": xs + 0 * ys, "y": ys + 0 * xs, "sum": xs + ys, "diff": xs - ys}

    admissible = np.ones((len(candidates), len(candidates)), dtype=bool)
    norms = {}
    for name, vec in combos.items():
        dx = spatial_deltas(space, vec[..., 1])
        admissible &= vec[..., 0] > dx
        norms[name] = lorentz_norm_array(vec[..., 0], dx, space.p)
    if not admissible.any():
        LOGGER.warning("no admissible pair on a grid of radius %s", grid_radius)
        return None

    defect = 2 * norms["x"] ** 2 + 2 * norms["y"] ** 2 - norms["sum"] ** 2 - norms["diff"] ** 2
    scale = 2 * norms["x"] ** 2 + 2 * norms["y"] ** 2
    magnitude = np.where(admissible, np.abs(defect), -1.0)
    i, j = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
    LOGGER.debug("best pair %s %s with |E| = %s", candidates[i], candidates[j], magnitude[i, j])
    if not magnitude[i, j] > WITNESS_RELATIVE_FLOOR * scale[i, j]:
        return None
    return QuadrupleWitness(
        LorentzVector(*candidates[i]), LorentzVector(*candidates[j]), float(defect[i, j])
    )


def _sweep(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector, k_probe: float,
           lambdas: Sequence[float], strict: bool) -> List[SweepRow]:
    rows: List[SweepRow] = []
    for lam in lambdas:
        try:
            space_median, flat, sides = _medians(space, x, y, lam)
        except PreconditionError:
            if strict:
                raise
            LOGGER.debug("λ = %s leaves the swapped pair inadmissible; refining", lam)
            continue
        # timelike sides in the Lorentzian model of curvature k obey the Riemannian law at −k
        curvature = -k_probe if space.is_lorentzian else k_probe
        try:
            comparison = _median_closed_form(sides.ab, sides.ac, sides.bc, curvature)
        except DomainError:
            LOGGER.warning("comparison median inadmissible at λ = %s for k = %s; skipped", lam, k_probe)
            continue
        row = SweepRow(lam, space_median, flat, comparison)
        if abs(row.defect) < CERTIFICATE_MARGIN * row.error:
            if rows:
                LOGGER.warning("λ sweep stopped at %s: defect below rounding margin", lam)
            break
        rows.append(row)
        LOGGER.debug("λ=%s defect=%s diff=%s", lam, row.defect, row.difference)
    return rows


def _verdict(space: SpaceDescriptor, rows: List[SweepRow]) -> Verdict:
    tail = rows[-CERTIFICATE_LEVELS:]
    if len(tail) < CERTIFICATE_LEVELS:
        return Verdict.CONSISTENT
    signs = set()
    for row in tail:
        margin = CERTIFICATE_MARGIN * row.error
        if abs(row.defect) < margin or abs(row.difference) < margin:
            return Verdict.CONSISTENT
        if np.sign(row.difference) != np.sign(row.defect):
            return Verdict.CONSISTENT
        signs.add(np.sign(row.defect))
    if len(signs) != 1:
        return Verdict.CONSISTENT
    space_longer = signs.pop() > 0
    if space.is_lorentzian:
        return Verdict.VIOLATES_LOWER if space_longer else Verdict.VIOLATES_UPPER
    return Verdict.VIOLATES_UPPER if space_longer else Verdict.VIOLATES_LOWER


def bound_violation_certificate(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector,
                                k_probe: float, max_levels: int = DEFAULT_LAMBDA_LAST) -> BoundCertificate:
    """
    Compare the space's median against the curvature-k comparison median as λ → 0.

    Riemannian spaces: a lower bound k needs aM ≥ āM̄ and an upper bound aM ≤ āM̄.
    Lorentzian timelike bounds reverse both. A violation needs the sign of aM − āM̄ to
    follow the first-order defect at the three smallest kept λ with a margin of ten
    times the rounding estimate.
    """
    if k_probe == 0 or not math.isfinite(k_probe):
        raise PreconditionError(f"kProbe must be a nonzero finite real, got {k_probe}")
    _mode_of(space)
    lambdas = dyadic_grid(DEFAULT_LAMBDA_FIRST, max_levels)
    _medians(space, x, y, lambdas[0])

    rows = _sweep(space, x, y, k_probe, lambdas, strict=True)
    u = (x + y).scaled(0.5)
    v = (x - y).scaled(0.5)
    swapped = _sweep(space, u, v, k_probe, lambdas, strict=False)
    if not swapped and any(abs(r.defect) > 0 for r in rows):
        LOGGER.warning("swapped pair (u, v) admits no λ in the sweep")

    def margins(kept: List[SweepRow]) -> List[Tuple[float, float, float]]:
        return [(r.lam, r.difference, r.error) for r in kept[-CERTIFICATE_LEVELS:]]

    certificate = BoundCertificate(
        verdict=_verdict(space, rows),
        swapped_verdict=_verdict(space, swapped),
        k_probe=float(k_probe),
        margins=margins(rows),
        swapped_margins=margins(swapped),
        levels_used=len(rows),
        swapped_levels_used=len(swapped),
    )
    LOGGER.debug("certificate %s", certificate.to_dict())
    return certificate
