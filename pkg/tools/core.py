"""
Charts, Events and Causal Structure
Shared building blocks: the exponent type (with a distinguished infinity), space
descriptors, events, causal relations, cylinder lifts and finite nets.
"""

import csv
import enum
import io
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tools.errors import ChartMismatchError, PreconditionError

LOGGER = logging.getLogger(__name__)

DEFAULT_HEIGHT = 1.0
DEFAULT_CIRCUMFERENCE = 2 * math.pi
SEPARATION_TOLERANCE = 1e-12
TRIANGLE_TOLERANCE = 1e-9


class PInfinity(enum.Enum):
    """p = ∞; never represented as a large float."""
    INF = "inf"

    def __str__(self) -> str:
        return self.value


P_INF = PInfinity.INF
PValue = Union[float, PInfinity]

_INFINITY_SPELLINGS = {"inf", "infinity", "∞", "+inf"}


def parse_p(value: Any) -> PValue:
    """
    Parse an exponent p ∈ [1, ∞].

    Accepts numbers, numeric strings, P_INF and the spellings "inf"/"∞".
    Raises PreconditionError for p < 1 or NaN.
    """
    if isinstance(value, PInfinity):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in _INFINITY_SPELLINGS:
            return P_INF
        try:
            value = float(text)
        except ValueError:
            raise PreconditionError(f"p must be a number >= 1 or 'inf', got {value!r}")
    p = float(value)
    if math.isnan(p):
        raise PreconditionError("p must not be NaN")
    if math.isinf(p) and p > 0:
        return P_INF
    if p < 1:
        raise PreconditionError(f"p must satisfy p >= 1, got {p}")
    return p


def format_p(p: PValue) -> str:
    return "inf" if p is P_INF else repr(float(p))


def format_real(value: float) -> str:
    """17 significant digits, the serialization format of every artifact."""
    return format(float(value), ".17g")


class Chart(enum.Enum):
    PLANE = "plane"
    CYLINDER = "cylinder"
    NORMED_PLANE = "normed_plane"


class SpaceKind(enum.Enum):
    LORENTZ_PLANE = "lorentzPlane"
    LORENTZ_CYLINDER = "lorentzCylinder"
    NORMED_PLANE = "normedPlane"
    SPHERE = "sphere"


_CHART_OF_KIND = {
    SpaceKind.LORENTZ_PLANE: Chart.PLANE,
    SpaceKind.LORENTZ_CYLINDER: Chart.CYLINDER,
    SpaceKind.NORMED_PLANE: Chart.NORMED_PLANE,
}


class CausalRelation(enum.Enum):
    CHRONOLOGICAL = "chronological"
    CAUSAL_NULL = "causalNull"
    UNRELATED = "unrelated"


@dataclass(frozen=True)
class Event:
    """A point (t, x) of a chart. Cylinder events are built through SpaceDescriptor.event."""
    t: float
    x: float
    chart: Chart = Chart.PLANE

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", float(self.x))
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise PreconditionError(f"event coordinates must be finite, got ({self.t}, {self.x})")


@dataclass(frozen=True)
class SpaceDescriptor:
    kind: SpaceKind
    p: PValue = 2.0
    height: float = DEFAULT_HEIGHT
    circumference: float = DEFAULT_CIRCUMFERENCE
    k: float = 1.0

    def __post_init__(self):
        if self.kind is not SpaceKind.SPHERE:
            object.__setattr__(self, "p", parse_p(self.p))
        if not (self.height > 0 and math.isfinite(self.height)):
            raise PreconditionError(f"height must be a positive real, got {self.height}")
        if not (self.circumference > 0 and math.isfinite(self.circumference)):
            raise PreconditionError(f"circumference must be a positive real, got {self.circumference}")
        if self.kind is SpaceKind.LORENTZ_CYLINDER and self.height > self.circumference / 2:
            raise PreconditionError(
                f"cylinder height {self.height} exceeds circumference/2 = {self.circumference / 2}; "
                "winding timelike curves are not supported"
            )
        if self.kind is SpaceKind.SPHERE and not self.k > 0:
            raise PreconditionError(f"sphere requires curvature k > 0, got {self.k}")

    @classmethod
    def lorentz_plane(cls, p: Any) -> "SpaceDescriptor":
        return cls(SpaceKind.LORENTZ_PLANE, p=p)

    @classmethod
    def lorentz_cylinder(cls, p: Any, height: float = DEFAULT_HEIGHT,
                         circumference: float = DEFAULT_CIRCUMFERENCE) -> "SpaceDescriptor":
        return cls(SpaceKind.LORENTZ_CYLINDER, p=p, height=height, circumference=circumference)

    @classmethod
    def normed_plane(cls, p: Any) -> "SpaceDescriptor":
        return cls(SpaceKind.NORMED_PLANE, p=p)

    @classmethod
    def sphere(cls, k: float) -> "SpaceDescriptor":
        return cls(SpaceKind.SPHERE, k=k)

    @property
    def is_lorentzian(self) -> bool:
        return self.kind in (SpaceKind.LORENTZ_PLANE, SpaceKind.LORENTZ_CYLINDER)

    @property
    def chart(self) -> Chart:
        if self.kind is SpaceKind.SPHERE:
            raise PreconditionError("the sphere descriptor has no event chart")
        return _CHART_OF_KIND[self.kind]

    def event(self, t: float, x: float) -> Event:
        """Build an event of this space's chart; cylinder angles are normalized to [0, C)."""
        if self.kind is SpaceKind.LORENTZ_CYLINDER:
            x = float(x) % self.circumference
            if x >= self.circumference:
                x = 0.0
        return Event(t, x, self.chart)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is SpaceKind.SPHERE:
            data["k"] = self.k
        else:
            data["p"] = format_p(self.p)
        if self.kind is SpaceKind.LORENTZ_CYLINDER:
            data["height"] = self.height
            data["circumference"] = self.circumference
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpaceDescriptor":
        kind = SpaceKind(data["kind"])
        if kind is SpaceKind.SPHERE:
            return cls.sphere(float(data["k"]))
        return cls(
            kind,
            p=data.get("p", 2.0),
            height=float(data.get("height", DEFAULT_HEIGHT)),
            circumference=float(data.get("circumference", DEFAULT_CIRCUMFERENCE)),
        )


def check_chart(space: SpaceDescriptor, *events: Event) -> None:
    """Raise ChartMismatchError unless every event belongs to the space's chart."""
    chart = space.chart
    for event in events:
        if event.chart is not chart:
            raise ChartMismatchError(
                f"event ({event.t}, {event.x}) is in chart '{event.chart.value}', "
                f"space expects '{chart.value}'"
            )
        if chart is Chart.CYLINDER and not 0 <= event.x < space.circumference:
            raise ChartMismatchError(
                f"cylinder event angle {event.x} not normalized to [0, {space.circumference})"
            )


def lift_minimal_delta(a: Event, b: Event, circumference: float) -> float:
    """min over integers m of |b.x − a.x + m·C|, a value in [0, C/2]."""
    if not circumference > 0:
        raise PreconditionError(f"circumference must be positive, got {circumference}")
    d = abs(b.x - a.x) % circumference
    return min(d, circumference - d)


def spatial_deltas(space: SpaceDescriptor, dx: np.ndarray) -> np.ndarray:
    """|Δx| on the plane charts, the lift-minimal |Δx*| on the cylinder."""
    dx = np.asarray(dx, dtype=float)
    if space.kind is SpaceKind.LORENTZ_CYLINDER:
        d = np.mod(np.abs(dx), space.circumference)
        return np.minimum(d, space.circumference - d)
    return np.abs(dx)


def spatial_delta(space: SpaceDescriptor, a: Event, b: Event) -> float:
    if space.kind is SpaceKind.LORENTZ_CYLINDER:
        return lift_minimal_delta(a, b, space.circumference)
    return abs(b.x - a.x)


def causal_relation(a: Event, b: Event, space: SpaceDescriptor) -> CausalRelation:
    """Chronological iff Δt > |Δx*|; causalNull iff Δt = |Δx*| > 0 or a = b. Independent of p."""
    if not space.is_lorentzian:
        raise PreconditionError("causal relations need a Lorentzian space")
    check_chart(space, a, b)
    if a.t == b.t and a.x == b.x:
        return CausalRelation.CAUSAL_NULL
    dt = b.t - a.t
    dx = spatial_delta(space, a, b)
    if dt > dx:
        return CausalRelation.CHRONOLOGICAL
    if dt == dx and dt > 0:
        return CausalRelation.CAUSAL_NULL
    return CausalRelation.UNRELATED


@dataclass(frozen=True, eq=False)
class FiniteNet:
    """
    Finite list of events with the non-negative separation matrix
    sep[i][j] = τ(points[i], points[j]) (Lorentzian) or d(points[i], points[j]) (normed plane).
    """
    space: SpaceDescriptor
    points: Tuple[Event, ...]
    sep: np.ndarray
    mesh_t: Optional[float] = None
    mesh_x: Optional[float] = None

    def __post_init__(self):
        points = tuple(self.points)
        sep = np.array(self.sep, dtype=float)
        if sep.shape != (len(points), len(points)):
            raise PreconditionError(
                f"separation matrix shape {sep.shape} does not match {len(points)} points"
            )
        sep.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "sep", sep)

    @classmethod
    def from_points(cls, space: SpaceDescriptor, points: Iterable[Event],
                    mesh_t: Optional[float] = None, mesh_x: Optional[float] = None) -> "FiniteNet":
        from tools.lp_spaces import separation_matrix

        points = tuple(points)
        check_chart(space, *points)
        return cls(space, points, separation_matrix(space, points), mesh_t, mesh_x)

    def __len__(self) -> int:
        return len(self.points)

    def signed(self) -> np.ndarray:
        """Antisymmetric τ(a,b) − τ(b,a)."""
        return self.sep - self.sep.T

    def indices_at_time(self, t: float, tolerance: float = 1e-12) -> List[int]:
        return [i for i, event in enumerate(self.points) if abs(event.t - t) <= tolerance]

    def validate(self, tolerance: float = SEPARATION_TOLERANCE) -> None:
        """Check the net invariants; raise PreconditionError on the first violation."""
        from tools.lp_spaces import separation_matrix

        sep = self.sep
        if np.any(sep < 0) or not np.all(np.isfinite(sep)):
            raise PreconditionError("separations must be finite and non-negative")
        if np.any(np.diag(sep) != 0):
            raise PreconditionError("separation matrix must have a zero diagonal")
        if self.space.is_lorentzian:
            if np.any((sep > 0) & (sep.T > 0)):
                raise PreconditionError("sep[i][j] and sep[j][i] are both positive for some pair")
        else:
            if np.any(np.abs(sep - sep.T) > tolerance):
                raise PreconditionError("distance matrix is not symmetric")
            for k in range(len(self)):
                slack = sep[:, [k]] + sep[[k], :] - sep
                if np.any(slack < -TRIANGLE_TOLERANCE):
                    raise PreconditionError(f"triangle inequality fails through point {k}")
        expected = separation_matrix(self.space, self.points)
        worst = np.max(np.abs(expected - sep)) if len(self) else 0.0
        if worst > tolerance * max(1.0, float(np.max(np.abs(expected), initial=0.0))):
            raise PreconditionError(
                "stored separations disagree with re-evaluation",
                details={"max_abs_error": float(worst)},
            )

    def to_json(self) -> str:
        points = ",".join(f"[{format_real(e.t)},{format_real(e.x)}]" for e in self.points)
        rows = ",".join("[" + ",".join(format_real(v) for v in row) + "]" for row in self.sep)
        return f'{{"space":{json.dumps(self.space.to_dict(), sort_keys=True)},' \
               f'"points":[{points}],"sep":[{rows}]}}'

    @classmethod
    def from_json(cls, text: str) -> "FiniteNet":
        data = json.loads(text)
        space = SpaceDescriptor.from_dict(data["space"])
        points = tuple(Event(t, x, space.chart) for t, x in data["points"])
        net = cls(space, points, np.array(data["sep"], dtype=float).reshape(len(points), len(points)))
        net.validate()
        return net

    def to_csv(self) -> str:
        return matrix_to_csv(self.sep)


def matrix_to_csv(matrix: np.ndarray) -> str:
    """Square matrix with point indices as row and column headers."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    n = len(matrix)
    writer.writerow(["index"] + [str(j) for j in range(n)])
    for i, row in enumerate(matrix):
        writer.writerow([str(i)] + [format_real(v) for v in row])
    return buffer.getvalue()


def signed_separation(net: FiniteNet) -> np.ndarray:
    return net.signed()


def sample_net(space: SpaceDescriptor, n_t: int, n_x: int) -> FiniteNet:
    """
    Uniform grid {(i·h/(nT−1), j·C/nX)} with all pairwise separations.

    Args:
        space: a Lorentzian plane/cylinder or the normed plane
        n_t: number of time slices, at least 2
        n_x: number of points per slice, at least 1

    Returns:
        FiniteNet, row-major in (time slice, angle)
    """
    if n_t < 2:
        raise PreconditionError(f"nT must be at least 2, got {n_t}")
    if n_x < 1:
        raise PreconditionError(f"nX must be at least 1, got {n_x}")
    if space.kind is SpaceKind.SPHERE:
        raise PreconditionError("nets are sampled from plane or cylinder charts only")

    points = [
        space.event(i * space.height / (n_t - 1), j * space.circumference / n_x)
        for i in range(n_t)
        for j in range(n_x)
    ]
    mesh_t = space.height / (n_t - 1)
    mesh_x = space.circumference / n_x
    LOGGER.debug("sampled %d x %d net for %s", n_t, n_x, space.to_dict())
    return FiniteNet.from_points(space, points, mesh_t=mesh_t, mesh_x=mesh_x)


def parse_pair(value: Union[str, Sequence[float]]) -> Tuple[float, float]:
    """'2,0' or (2, 0) → (2.0, 0.0)."""
    return tuple(_parse_reals(value, 2))  # type: ignore[return-value]


def _parse_reals(value: Union[str, Sequence[float]], count: int) -> List[float]:
    if isinstance(value, str):
        parts = [part for part in value.replace(" ", "").split(",") if part]
    else:
        parts = list(value)
    try:
        reals = [float(part) for part in parts]
    except (TypeError, ValueError):
        raise PreconditionError(f"expected {count} comma-separated numbers, got {value!r}")
    if len(reals) != count:
        raise PreconditionError(f"expected {count} comma-separated numbers, got {value!r}")
    return reals


def parse_reals(value: Union[str, Sequence[float]], count: int) -> Tuple[float, ...]:
    return tuple(_parse_reals(value, count))
