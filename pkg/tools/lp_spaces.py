"""
L^p Time Separations and Norms
τ^p on the Lorentzian plane and cylinder, τ^∞, the l^p distance of the normed plane,
the parallelogram defect E(p) and reverse-triangle checks on nets.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from tools.core import (
    P_INF,
    Event,
    FiniteNet,
    PValue,
    SpaceDescriptor,
    SpaceKind,
    check_chart,
    parse_p,
    spatial_delta,
    spatial_deltas,
)
from tools.errors import PreconditionError

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class LorentzVector:
    v0: float
    v1: float

    def __post_init__(self):
        object.__setattr__(self, "v0", float(self.v0))
        object.__setattr__(self, "v1", float(self.v1))
        if not (math.isfinite(self.v0) and math.isfinite(self.v1)):
            raise PreconditionError(f"vector components must be finite, got ({self.v0}, {self.v1})")

    def __add__(self, other: "LorentzVector") -> "LorentzVector":
        return LorentzVector(self.v0 + other.v0, self.v1 + other.v1)

    def __sub__(self, other: "LorentzVector") -> "LorentzVector":
        return LorentzVector(self.v0 - other.v0, self.v1 - other.v1)

    def scaled(self, factor: float) -> "LorentzVector":
        return LorentzVector(factor * self.v0, factor * self.v1)

    def is_future_timelike(self) -> bool:
        """0 ≪ v on the plane."""
        return self.v0 > abs(self.v1)


class DefectMode(enum.Enum):
    LORENTZ = "lorentz"
    RIEMANN = "riemann"


def lorentz_norm_array(v0, v1, p: PValue) -> np.ndarray:
    """
    Vectorised |v|^p: (|v0|^p − |v1|^p)^{1/p} for v0 > |v1|, else 0.

    The root is taken as v0·(1 − r^p)^{1/p} with r = |v1|/v0 and log r = log1p(−(v0 − |v1|)/v0),
    so the difference v0 − |v1| is formed before any power is taken.
    """
    t, s = np.broadcast_arrays(np.asarray(v0, dtype=float), np.abs(np.asarray(v1, dtype=float)))
    shape = t.shape
    t = t.ravel()
    s = s.ravel()
    out = np.zeros(t.shape)
    mask = t > s
    if not mask.any():
        return out.reshape(shape)
    tm = t[mask]
    sm = s[mask]
    if p is P_INF:
        out[mask] = tm
    elif p == 1.0:
        out[mask] = tm - sm
    elif p == 2.0:
        out[mask] = np.sqrt((tm - sm) * (tm + sm))
    else:
        gap = (tm - sm) / tm
        with np.errstate(divide="ignore"):
            log_r = np.log1p(-gap)
            one_minus = -np.expm1(p * log_r)
            out[mask] = tm * np.exp(np.log(one_minus) / p)
    return out.reshape(shape)


def lp_norm_array(v0, v1, p: PValue) -> np.ndarray:
    """Vectorised l^p norm (|v0|^p + |v1|^p)^{1/p}; max-norm for p = ∞."""
    a, b = np.broadcast_arrays(np.abs(np.asarray(v0, dtype=float)), np.abs(np.asarray(v1, dtype=float)))
    big = np.maximum(a, b)
    small = np.minimum(a, b)
    if p is P_INF:
        return big.astype(float)
    if p == 1.0:
        return a + b
    if p == 2.0:
        return np.hypot(a, b)
    ratio = np.divide(small, big, out=np.zeros_like(big, dtype=float), where=big > 0)
    return big * np.exp(np.log1p(ratio ** p) / p)


def _scalar(values: np.ndarray) -> float:
    return float(np.asarray(values).reshape(-1)[0])


def lp_lorentz_norm(v: LorentzVector, p) -> float:
    """|v|^p. Raises PreconditionError for p < 1."""
    p = parse_p(p)
    return _scalar(lorentz_norm_array(v.v0, v.v1, p))


def lp_norm(v: LorentzVector, p) -> float:
    p = parse_p(p)
    return _scalar(lp_norm_array(v.v0, v.v1, p))


def _require_lorentzian(space: SpaceDescriptor) -> None:
    if not space.is_lorentzian:
        raise PreconditionError(f"τ^p needs a Lorentzian plane or cylinder, got {space.kind.value}")


def tau_p(a: Event, b: Event, space: SpaceDescriptor) -> float:
    """τ^p(a, b) = |b − a|^p, using the lift-minimal spatial difference on the cylinder."""
    _require_lorentzian(space)
    check_chart(space, a, b)
    return _scalar(lorentz_norm_array(b.t - a.t, spatial_delta(space, a, b), space.p))


def tau_infinity(a: Event, b: Event, space: SpaceDescriptor) -> float:
    """τ^∞(a, b) = Δt if Δt > |Δx*|, else 0."""
    _require_lorentzian(space)
    check_chart(space, a, b)
    dt = b.t - a.t
    return dt if dt > spatial_delta(space, a, b) else 0.0


def lp_plane_distance(a: Event, b: Event, p) -> float:
    return _scalar(lp_norm_array(b.t - a.t, b.x - a.x, parse_p(p)))


def space_norm(space: SpaceDescriptor, v: LorentzVector) -> float:
    """The norm a homogeneous space assigns to the displacement v from the origin."""
    if space.kind is SpaceKind.LORENTZ_PLANE:
        return _scalar(lorentz_norm_array(v.v0, v.v1, space.p))
    if space.kind is SpaceKind.LORENTZ_CYLINDER:
        return _scalar(lorentz_norm_array(v.v0, spatial_deltas(space, v.v1), space.p))
    if space.kind is SpaceKind.NORMED_PLANE:
        return _scalar(lp_norm_array(v.v0, v.v1, space.p))
    raise PreconditionError("the sphere descriptor has no vector norm")


def pairwise_separation(space: SpaceDescriptor, sources: Sequence[Event],
                        targets: Sequence[Event]) -> np.ndarray:
    """Matrix M[i][j] = τ(sources[i], targets[j]) (or the l^p distance on the normed plane)."""
    if space.kind is SpaceKind.SPHERE:
        raise PreconditionError("the sphere descriptor has no event chart")
    src = np.array([[e.t, e.x] for e in sources], dtype=float).reshape(-1, 2)
    dst = np.array([[e.t, e.x] for e in targets], dtype=float).reshape(-1, 2)
    dt = dst[None, :, 0] - src[:, None, 0]
    dx = dst[None, :, 1] - src[:, None, 1]
    if space.kind is SpaceKind.NORMED_PLANE:
        return lp_norm_array(dt, dx, space.p)
    return lorentz_norm_array(dt, spatial_deltas(space, dx), space.p)


def separation_matrix(space: SpaceDescriptor, points: Sequence[Event]) -> np.ndarray:
    return pairwise_separation(space, points, points)


def check_future_quadruple(space: SpaceDescriptor, x: LorentzVector, y: LorentzVector) -> None:
    """Require x, y, x+y, x−y ≫ 0 in the space's causal structure."""
    for name, v in (("x", x), ("y", y), ("x+y", x + y), ("x-y", x - y)):
        dx = _scalar(spatial_deltas(space, v.v1)) if space.is_lorentzian else abs(v.v1)
        if not v.v0 > dx:
            raise PreconditionError(
                f"{name} = ({v.v0}, {v.v1}) is not chronologically after 0",
                details={"vector": name},
            )


def parallelogram_defect(x: LorentzVector, y: LorentzVector, p, mode=DefectMode.LORENTZ) -> float:
    """
    E = 2‖x‖² + 2‖y‖² − ‖x+y‖² − ‖x−y‖² in |·|^p (lorentz) or the l^p norm (riemann).

    Lorentz mode requires x, y, x+y, x−y ≫ 0.
    """
    p = parse_p(p)
    mode = DefectMode(mode)
    if mode is DefectMode.LORENTZ:
        check_future_quadruple(SpaceDescriptor.lorentz_plane(p), x, y)
        norm = lorentz_norm_array
    else:
        norm = lp_norm_array
    v0 = np.array([x.v0, y.v0, x.v0 + y.v0, x.v0 - y.v0])
    v1 = np.array([x.v1, y.v1, x.v1 + y.v1, x.v1 - y.v1])
    nx, ny, ns, nd = norm(v0, v1, p) ** 2
    return float(2 * nx + 2 * ny - ns - nd)


def unit_hyperboloid(x1: float, p) -> LorentzVector:
    """The point ((1 + |x1|^p)^{1/p}, x1) with |·|^p = 1."""
    p = parse_p(p)
    if p is P_INF:
        raise PreconditionError("the unit hyperboloid of p = ∞ is not a graph over x1")
    if x1 == 0:
        return LorentzVector(1.0, 0.0)
    x0 = math.exp(np.logaddexp(0.0, p * math.log(abs(x1))) / p)
    return LorentzVector(x0, x1)


def reverse_triangle_violations(net: FiniteNet, slack: float = 1e-12) -> List[Tuple[int, int, int]]:
    """Triples i ≪ j ≪ k with τ(i,k) < τ(i,j) + τ(j,k) − slack."""
    return _chronological_triples(net, lambda gap: gap < -slack)


def splitting_triples(net: FiniteNet, tolerance: float = 1e-12) -> List[Tuple[int, int, int]]:
    """Triples i ≪ j ≪ k where the reverse triangle inequality is an equality."""
    return _chronological_triples(net, lambda gap: np.abs(gap) <= tolerance)


def _chronological_triples(net: FiniteNet, select) -> List[Tuple[int, int, int]]:
    _require_lorentzian(net.space)
    sep = net.sep
    found: List[Tuple[int, int, int]] = []
    for j in range(len(net)):
        before = sep[:, j] > 0
        after = sep[j, :] > 0
        if not (before.any() and after.any()):
            continue
        gap = sep - (sep[:, [j]] + sep[[j], :])
        hits = np.argwhere(before[:, None] & after[None, :] & select(gap))
        found.extend((int(i), j, int(k)) for i, k in hits)
    found.sort()
    return found
