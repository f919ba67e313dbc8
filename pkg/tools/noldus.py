"""
Noldus Metrics
Discretized Noldus and Noldus² metrics on finite nets and causal diamonds, the
steepness probe of the Noldus² witness bound, and greedy covering numbers.

Every supremum here runs over a finite grid and is therefore a lower bound of the
continuum supremum.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from tools.core import P_INF, Event, FiniteNet, SpaceDescriptor, matrix_to_csv, parse_p
from tools.errors import PreconditionError
from tools.lp_spaces import pairwise_separation

LOGGER = logging.getLogger(__name__)

METRIC_TOLERANCE = 1e-9
STEEPNESS_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class MetricNet:
    """Points with a symmetric distance matrix built by a named construction."""
    points: Tuple[Event, ...]
    dist: np.ndarray
    construction: str = "noldus"

    def __post_init__(self):
        dist = np.array(self.dist, dtype=float)
        if dist.shape != (len(self.points), len(self.points)):
            raise PreconditionError("distance matrix does not match the point list")
        dist.setflags(write=False)
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "dist", dist)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if len(self) else 0.0

    def validate(self, tolerance: float = METRIC_TOLERANCE) -> None:
        d = self.dist
        if np.any(d < 0) or np.any(np.diag(d) != 0):
            raise PreconditionError("distances must be non-negative with a zero diagonal")
        if np.any(np.abs(d - d.T) > tolerance):
            raise PreconditionError("distance matrix is not symmetric")
        for k in range(len(self)):
            if np.any(d[:, [k]] + d[[k], :] - d < -tolerance):
                raise PreconditionError(f"triangle inequality fails through point {k}")

    def to_csv(self) -> str:
        return matrix_to_csv(self.dist)


@dataclass(frozen=True)
class Diamond:
    """The causal diamond J(past, future) sampled on a null-coordinate lattice."""
    space: SpaceDescriptor
    past: Event
    future: Event
    resolution: int = 32

    def grid(self) -> List[Event]:
        return diamond_grid(self.space, self.past, self.future, self.resolution)

    def contains(self, event: Event, tolerance: float = 1e-12) -> bool:
        u, v = event.t + event.x, event.t - event.x
        u0, v0 = self.past.t + self.past.x, self.past.t - self.past.x
        u1, v1 = self.future.t + self.future.x, self.future.t - self.future.x
        return u0 - tolerance <= u <= u1 + tolerance and v0 - tolerance <= v <= v1 + tolerance


@dataclass(frozen=True)
class SteepnessRow:
    lam: float
    bound: float
    slope: float


def noldus_distance(net: FiniteNet, i: int, j: int) -> float:
    """max over z of |τ(i,z) − τ(j,z)| and |τ(z,i) − τ(z,j)|."""
    n = len(net)
    if not (0 <= i < n and 0 <= j < n):
        raise PreconditionError(f"indices ({i}, {j}) out of range for a net of {n} points")
    sep = net.sep
    forward = np.max(np.abs(sep[i] - sep[j]), initial=0.0)
    backward = np.max(np.abs(sep[:, i] - sep[:, j]), initial=0.0)
    return float(max(forward, backward))


def noldus_metric_net(net: FiniteNet, indices: Optional[Sequence[int]] = None) -> MetricNet:
    """Noldus distances among the selected points, z ranging over the whole net."""
    selected = list(range(len(net))) if indices is None else [int(i) for i in indices]
    if any(not 0 <= i < len(net) for i in selected):
        raise PreconditionError("selected indices out of range")
    rows = net.sep[selected]
    cols = net.sep[:, selected].T
    dist = np.zeros((len(selected), len(selected)))
    for a in range(len(selected)):
        forward = np.max(np.abs(rows - rows[a]), axis=1, initial=0.0)
        backward = np.max(np.abs(cols - cols[a]), axis=1, initial=0.0)
        dist[a] = np.maximum(forward, backward)
    dist = np.maximum(dist, dist.T)
    LOGGER.debug("noldus metric on %d of %d points", len(selected), len(net))
    return MetricNet(tuple(net.points[i] for i in selected), dist, "noldus")


def distinguishes_points(net: FiniteNet) -> bool:
    """True iff every pair of distinct net points has positive Noldus distance."""
    metric = noldus_metric_net(net)
    off_diagonal = ~np.eye(len(metric), dtype=bool)
    return bool(np.all(metric.dist[off_diagonal] > 0))


def diamond_grid(space: SpaceDescriptor, past: Event, future: Event, resolution: int) -> List[Event]:
    """
    Lattice of J(past, future) in null coordinates u = t + x, v = t − x.

    Args:
        space: Lorentzian plane or cylinder (causal cones do not depend on p)
        past, future: corners with future in the causal future of past
        resolution: subdivisions per null edge; even values put the edge midpoints on the grid

    Returns:
        (resolution + 1)² events including the four corners
    """
    if not space.is_lorentzian:
        raise PreconditionError("causal diamonds need a Lorentzian space")
    if resolution < 1:
        raise PreconditionError(f"resolution must be positive, got {resolution}")
    u0, v0 = past.t + past.x, past.t - past.x
    u1, v1 = future.t + future.x, future.t - future.x
    if u1 < u0 or v1 < v0:
        raise PreconditionError("future corner is not in the causal future of the past corner")
    us = np.linspace(u0, u1, resolution + 1)
    vs = np.linspace(v0, v1, resolution + 1)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    return [space.event(0.5 * (u + v), 0.5 * (u - v)) for u, v in zip(uu.ravel(), vv.ravel())]


def noldus_squared_distance(net_or_diamond: Union[FiniteNet, Diamond], a: Event, b: Event) -> float:
    """
    max over grid points z of |σ(a,z)|σ(a,z)| − σ(b,z)|σ(b,z)||, σ the signed τ.

    On antisymmetric σ both argument slots give the same value.
    """
    if isinstance(net_or_diamond, Diamond):
        diamond = net_or_diamond
        for event in (a, b):
            if not diamond.contains(event):
                raise PreconditionError(f"event ({event.t}, {event.x}) lies outside the diamond")
        space, grid = diamond.space, diamond.grid()
    else:
        space, grid = net_or_diamond.space, list(net_or_diamond.points)
    if not grid:
        return 0.0
    forward = pairwise_separation(space, [a, b], grid)
    backward = pairwise_separation(space, grid, [a, b]).T
    signed = forward - backward
    squared = signed * np.abs(signed)
    return float(np.max(np.abs(squared[0] - squared[1])))


def witness_bound(p, lam: float) -> float:
    """(1/16)(1 − (1 − 2λ)^p)^{2/p} for λ ∈ (0, ½]."""
    p = parse_p(p)
    if p is P_INF:
        raise PreconditionError("the witness bound needs a finite exponent")
    if not 0 < lam <= 0.5:
        raise PreconditionError(f"λ must lie in (0, 1/2], got {lam}")
    if lam == 0.5:
        return 1.0 / 16
    inner = -math.expm1(p * math.log1p(-2 * lam))
    return math.exp((2.0 / p) * math.log(inner)) / 16


def steepness_probe(p, lambdas: Sequence[float]) -> List[SteepnessRow]:
    """Witness bound and its central-difference slope over a decreasing λ grid."""
    p = parse_p(p)
    if p is P_INF or p <= 1:
        raise PreconditionError(f"the steepness probe needs a finite p > 1, got {p}")
    grid = [float(lam) for lam in lambdas]
    if not grid or any(not 0 < lam < 0.5 for lam in grid):
        raise PreconditionError("λ values must lie in (0, 1/2)")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("λ grid must be strictly decreasing")
    rows = []
    for lam in grid:
        h = lam * STEEPNESS_STEP
        slope = (witness_bound(p, min(lam + h, 0.5)) - witness_bound(p, lam - h)) / (min(lam + h, 0.5) - lam + h)
        rows.append(SteepnessRow(lam, witness_bound(p, lam), slope))
        LOGGER.debug("p=%s λ=%s slope=%s", p, lam, slope)
    return rows


def greedy_centers(metric: MetricNet, radius: float) -> List[int]:
    """Centers chosen in point order, each covering its closed radius-ball."""
    if not radius > 0:
        raise PreconditionError(f"radius must be positive, got {radius}")
    covered = np.zeros(len(metric), dtype=bool)
    centers: List[int] = []
    for i in range(len(metric)):
        if covered[i]:
            continue
        centers.append(i)
        covered |= metric.dist[i] <= radius
    return centers


def covering_number(metric: MetricNet, radius: float) -> int:
    """Greedy upper bound for the number of closed radius-balls covering the net."""
    return len(greedy_centers(metric, radius))
