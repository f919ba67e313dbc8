"""
Comparison Geometry
Spherical comparison triangles in ambient coordinates, the closed-form comparison
median for constant curvature k, its small-scale expansion, and the flat Lorentzian
comparison triangle.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from tools.core import TRIANGLE_TOLERANCE
from tools.errors import DomainError, PreconditionError, TriangleTooLargeError
from tools.lp_spaces import LorentzVector, lp_lorentz_norm

LOGGER = logging.getLogger(__name__)

RADICAND_TOLERANCE = 1e-12
# arccos argument may exceed 1 by this much before DomainError
ARCCOS_SLACK = 1e-12
SPHERE_ROUND_TRIP_TOLERANCE = 1e-9


class Signature(enum.Enum):
    RIEMANN = "riemann"
    LORENTZ = "lorentz"


@dataclass(frozen=True)
class TriangleSides:
    """
    Side values of a triangle a, b, c.

    riemann: metric triangle, all sides positive and satisfying the triangle inequality.
    lorentz: timelike triangle a ≪ b ≪ c with ab = τ(a,b), bc = τ(b,c), ac = τ(a,c) ≥ ab + bc.
    """
    ab: float
    ac: float
    bc: float
    signature: Signature = Signature.RIEMANN

    def __post_init__(self):
        for name in ("ab", "ac", "bc"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value >= 0):
                raise PreconditionError(f"side {name} must be a finite non-negative real, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "signature", Signature(self.signature))
        slack = TRIANGLE_TOLERANCE * max(self.ab, self.ac, self.bc, 1.0)
        if self.signature is Signature.RIEMANN:
            if min(self.ab, self.ac, self.bc) <= 0:
                raise PreconditionError("riemannian triangle sides must be positive")
            if (self.ab > self.ac + self.bc + slack or self.ac > self.ab + self.bc + slack
                    or self.bc > self.ab + self.ac + slack):
                raise PreconditionError(
                    f"sides ({self.ab}, {self.ac}, {self.bc}) violate the triangle inequality"
                )
        elif self.ac < self.ab + self.bc - slack:
            raise PreconditionError(
                f"not a valid timelike triangle: ac = {self.ac} < ab + bc = {self.ab + self.bc}"
            )

    def scaled(self, factor: float) -> "TriangleSides":
        return TriangleSides(factor * self.ab, factor * self.ac, factor * self.bc, self.signature)

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.ab, self.ac, self.bc


@dataclass(frozen=True, eq=False)
class ComparisonPoints:
    """ā, b̄, c̄, M̄ on the sphere of radius 1/√k in R³."""
    a_bar: np.ndarray
    b_bar: np.ndarray
    c_bar: np.ndarray
    m_bar: np.ndarray
    k: float

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.k)


def _half_angle_sin2(angle: float) -> float:
    return math.sin(angle / 2) ** 2


def _require_riemann(sides: TriangleSides) -> None:
    if sides.signature is not Signature.RIEMANN:
        raise PreconditionError("this comparison needs riemannian side lengths")


def sphere_comparison_triangle(sides: TriangleSides, k: float, orientation: int = 1) -> ComparisonPoints:
    """
    Realize the triangle on (1/√k)·S² with ā on the first axis and b̄ in the first coordinate plane.

    Args:
        sides: riemannian side lengths
        k: positive curvature
        orientation: +1 or −1, the side of the ā b̄ plane that c̄ lies on

    Returns:
        ComparisonPoints whose pairwise spherical distances reproduce the sides
    """
    _require_riemann(sides)
    if not k > 0:
        raise PreconditionError(f"sphere comparison needs k > 0, got {k}")
    if orientation not in (1, -1):
        raise PreconditionError(f"orientation must be +1 or -1, got {orientation}")
    root_k = math.sqrt(k)
    big_a, big_b, big_c = (side * root_k for side in sides.as_tuple())
    if max(big_a, big_b, big_c) > math.pi:
        raise TriangleTooLargeError(
            f"a side exceeds the sphere's diameter π/√k = {math.pi / root_k}",
            details={"sides": sides.as_tuple(), "k": k},
        )
    sin_a = math.sin(big_a)
    if sin_a <= RADICAND_TOLERANCE:
        raise TriangleTooLargeError("side ab is antipodal on the comparison sphere", details={"k": k})

    s_a, s_b, s_c = _half_angle_sin2(big_a), _half_angle_sin2(big_b), _half_angle_sin2(big_c)
    # cos C − cos A cos B, written without cancellation for small sides
    w = (2 * s_a + 2 * s_b - 4 * s_a * s_b - 2 * s_c) / sin_a
    radicand = math.sin(big_b) ** 2 - w * w
    if radicand < -RADICAND_TOLERANCE:
        raise TriangleTooLargeError(
            "triangle too large for this k",
            details={"sides": sides.as_tuple(), "k": k, "radicand": radicand},
        )
    z = orientation * math.sqrt(max(radicand, 0.0))

    radius = 1.0 / root_k
    a_bar = np.array([radius, 0.0, 0.0])
    b_bar = radius * np.array([math.cos(big_a), sin_a, 0.0])
    c_bar = radius * np.array([math.cos(big_b), w, z])
    chord_mid = b_bar + c_bar
    length = float(np.linalg.norm(chord_mid))
    if length == 0:
        raise TriangleTooLargeError("b̄ and c̄ are antipodal; the midpoint is not unique")
    m_bar = radius * chord_mid / length
    return ComparisonPoints(a_bar, b_bar, c_bar, m_bar, float(k))


def spherical_distance(p: np.ndarray, q: np.ndarray, k: float) -> float:
    """(1/√k)·angle(p, q), the angle taken by atan2 for accuracy at small separations."""
    cross = float(np.linalg.norm(np.cross(p, q)))
    return math.atan2(cross, float(np.dot(p, q))) / math.sqrt(k)


def comparison_points_distance(points: ComparisonPoints) -> Tuple[float, float, float, float]:
    """(ab, ac, bc, aM) recomputed from the ambient coordinates."""
    k = points.k
    return (
        spherical_distance(points.a_bar, points.b_bar, k),
        spherical_distance(points.a_bar, points.c_bar, k),
        spherical_distance(points.b_bar, points.c_bar, k),
        spherical_distance(points.a_bar, points.m_bar, k),
    )


def _median_closed_form(ab: float, ac: float, bc: float, k: float) -> float:
    """
    Median from a to the midpoint of bc in the model space of curvature k.

    Uses sin²(M√k/2) = [sin²(A/2) + sin²(B/2) − 2 sin²(C/4)] / (2 cos(C/2)) and the
    sinh/cosh continuation for k < 0, which is the arccos/arccosh law with the
    leading cancellation removed.
    """
    if k == 0:
        square = 2 * ab * ab + 2 * ac * ac - bc * bc
        if square < -TRIANGLE_TOLERANCE * max(ab, ac, bc, 1.0) ** 2:
            raise DomainError(f"flat median radicand {square} is negative")
        return 0.5 * math.sqrt(max(square, 0.0))

    root_k = math.sqrt(abs(k))
    big_a, big_b, big_c = ab * root_k, ac * root_k, bc * root_k
    if k > 0:
        denominator = 2 * math.cos(big_c / 2)
        if denominator <= 0:
            raise DomainError(f"bc√k = {big_c} ≥ π leaves the arccos law undefined")
        h = (math.sin(big_a / 2) ** 2 + math.sin(big_b / 2) ** 2
             - 2 * math.sin(big_c / 4) ** 2) / denominator
        if h < -ARCCOS_SLACK / 2 or h > 1:
            raise DomainError(
                f"arccos argument {1 - 2 * h} outside [-1, 1 + {ARCCOS_SLACK}]",
                details={"sides": (ab, ac, bc), "k": k},
            )
        return 2 * math.asin(math.sqrt(max(h, 0.0))) / root_k

    h = (math.sinh(big_a / 2) ** 2 + math.sinh(big_b / 2) ** 2
         - 2 * math.sinh(big_c / 4) ** 2) / (2 * math.cosh(big_c / 2))
    if h < -ARCCOS_SLACK / 2:
        raise DomainError(
            f"arccosh argument {1 + 2 * h} below 1",
            details={"sides": (ab, ac, bc), "k": k},
        )
    return 2 * math.asinh(math.sqrt(max(h, 0.0))) / root_k


def comparison_median(sides: TriangleSides, k: float) -> float:
    """d̄(ā, M̄) on the model surface of curvature k; continuous in k at 0."""
    _require_riemann(sides)
    return _median_closed_form(sides.ab, sides.ac, sides.bc, float(k))


def lorentz_comparison_points(sides: TriangleSides) -> Tuple[LorentzVector, LorentzVector, LorentzVector]:
    """
    Flat realization ā = (0,0), c̄ = (ac, 0), b̄ = (t, x) with x ≥ 0.

    Returns:
        (b̄, c̄, M̄) with M̄ the affine midpoint of b̄c̄
    """
    if sides.signature is not Signature.LORENTZ:
        raise PreconditionError("lorentzian comparison needs lorentz side values")
    ab, ac, bc = sides.as_tuple()
    if ac <= 0:
        raise PreconditionError("not a valid timelike triangle: ac must be positive")
    t = (ac * ac + ab * ab - bc * bc) / (2 * ac)
    x_square = (t - ab) * (t + ab)
    if x_square < -TRIANGLE_TOLERANCE * max(ac, 1.0) ** 2:
        raise PreconditionError("not a valid timelike triangle", details={"sides": sides.as_tuple()})
    x = math.sqrt(max(x_square, 0.0))
    b_bar = LorentzVector(t, x)
    c_bar = LorentzVector(ac, 0.0)
    m_bar = (b_bar + c_bar).scaled(0.5)
    return b_bar, c_bar, m_bar


def lorentz_comparison_median(sides: TriangleSides) -> float:
    """τ(ā, M̄) in Minkowski space R^{1,1}."""
    _, _, m_bar = lorentz_comparison_points(sides)
    return lp_lorentz_norm(m_bar, 2.0)


def median_expansion_coefficients(sides: TriangleSides, k: float) -> Tuple[float, float]:
    """
    (c1, c3) with comparison_median(λ·sides, k) = c1·λ + c3·λ³ + O(λ⁴).

    c1 = ½√(2ab² + 2ac² − bc²), c3 = −k·Π / (96·c1), Π the product
    (ab−ac−bc)(ab+ac−bc)(ab−ac+bc)(ab+ac+bc).
    """
    _require_riemann(sides)
    ab, ac, bc = sides.as_tuple()
    c1 = 0.5 * math.sqrt(max(2 * ab * ab + 2 * ac * ac - bc * bc, 0.0))
    if c1 == 0:
        raise PreconditionError("degenerate triangle: the flat median vanishes")
    product = (ab - ac - bc) * (ab + ac - bc) * (ab - ac + bc) * (ab + ac + bc)
    c3 = -float(k) * product / (96 * c1)
    return c1, c3
