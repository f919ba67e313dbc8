"""
Lorentzian Gromov-Hausdorff Estimates
Distortion of correspondences between finite nets, the closed-form identity bound
between Cyl^p and Cyl^q, exact branch and bound for tiny nets, a seeded local
search for larger ones, the Noldus lower bound, and the p-sweep experiment.
"""

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from tools.core import (
    P_INF,
    DEFAULT_CIRCUMFERENCE,
    DEFAULT_HEIGHT,
    FiniteNet,
    PValue,
    SpaceDescriptor,
    format_p,
    format_real,
    parse_p,
    sample_net,
)
from tools.errors import ExhaustiveLimitError, InvalidCorrespondenceError, PreconditionError
from tools.noldus import MetricNet, noldus_metric_net

LOGGER = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20
START_ENUMERATION_LIMIT = 64
IDENTITY_GRID_POINTS = 4095
IDENTITY_XATOL = 1e-13
MAX_RADIUS_CANDIDATES = 512
MAX_SEARCH_ITERATIONS = 200
IMPROVEMENT_SLACK = 1e-15

Pair = Tuple[int, int]


@dataclass(frozen=True)
class Correspondence:
    """Relation R ⊂ X × Y given by index pairs."""
    pairs: FrozenSet[Pair]
    n_x: int
    n_y: int

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((int(i), int(j)) for i, j in self.pairs))

    @classmethod
    def identity(cls, n: int) -> "Correspondence":
        return cls(frozenset((i, i) for i in range(n)), n, n)

    def validate(self) -> None:
        if any(not (0 <= i < self.n_x and 0 <= j < self.n_y) for i, j in self.pairs):
            raise InvalidCorrespondenceError("correspondence refers to indices outside the nets")
        if {i for i, _ in self.pairs} != set(range(self.n_x)):
            raise InvalidCorrespondenceError("projection onto the first net is not surjective")
        if {j for _, j in self.pairs} != set(range(self.n_y)):
            raise InvalidCorrespondenceError("projection onto the second net is not surjective")

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        ordered = sorted(self.pairs)
        return (np.array([i for i, _ in ordered], dtype=int),
                np.array([j for _, j in ordered], dtype=int))


@dataclass(frozen=True)
class SweepRow:
    p: PValue
    q: PValue
    upper_closed: float
    upper_search: float
    lower_noldus: float
    mesh_t: float
    mesh_x: float


def _signed(net: FiniteNet) -> np.ndarray:
    if not net.space.is_lorentzian:
        raise PreconditionError("GH distortion is taken on lorentzian nets")
    return net.signed()


def _pair_costs(sx: np.ndarray, sy: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.abs(sx[np.ix_(xs, xs)] - sy[np.ix_(ys, ys)])


def distortion(correspondence: Correspondence, nx: FiniteNet, ny: FiniteNet) -> float:
    """max over pairs (i,j), (i′,j′) in R of |σ_X(i,i′) − σ_Y(j,j′)|, σ the signed τ."""
    if (correspondence.n_x, correspondence.n_y) != (len(nx), len(ny)):
        raise InvalidCorrespondenceError("correspondence sizes do not match the nets")
    correspondence.validate()
    if not correspondence.pairs:
        return 0.0
    xs, ys = correspondence.arrays()
    return float(_pair_costs(_signed(nx), _signed(ny), xs, ys).max())


def _boundary_profile(phi, p: PValue):
    """(1 − φ^p)^{1/p} for φ ∈ (0, 1)."""
    phi = np.asarray(phi, dtype=float)
    if p is P_INF:
        return np.ones_like(phi)
    if p == 1.0:
        return 1.0 - phi
    return np.exp(np.log(-np.expm1(p * np.log(phi))) / p)


def gh_identity_upper_cyl(p, q) -> float:
    """
    ½ sup over φ ∈ (0, 1) of |(1 − φ^p)^{1/p} − (1 − φ^q)^{1/q}|.

    A dense grid brackets the maximizer and a bounded scalar search polishes it.
    """
    p, q = parse_p(p), parse_p(q)
    if p == q:
        return 0.0
    if (p is P_INF) != (q is P_INF):
        # the finite profile tends to 0 at φ → 1 while the other stays 1
        return 0.5

    def gap(phi):
        return np.abs(_boundary_profile(phi, p) - _boundary_profile(phi, q))

    grid = np.arange(1, IDENTITY_GRID_POINTS + 1) / (IDENTITY_GRID_POINTS + 1)
    values = gap(grid)
    best = int(np.argmax(values))
    lo = grid[best - 1] if best > 0 else grid[best] / 2
    hi = grid[best + 1] if best + 1 < len(grid) else (grid[best] + 1) / 2
    result = minimize_scalar(lambda phi: -float(gap(phi)), bounds=(lo, hi), method="bounded",
                             options={"xatol": IDENTITY_XATOL})
    sup = max(float(values[best]), -float(result.fun))
    LOGGER.debug("identity bound p=%s q=%s at φ≈%s", format_p(p), format_p(q), result.x)
    return 0.5 * sup


def _check_sizes(nx: FiniteNet, ny: FiniteNet) -> bool:
    """False when both nets are empty; raise when exactly one is."""
    if len(nx) == 0 and len(ny) == 0:
        return False
    if len(nx) == 0 or len(ny) == 0:
        raise PreconditionError("no correspondence exists between an empty and a non-empty net")
    return True


def gh_exact_small(nx: FiniteNet, ny: FiniteNet, incumbent: Optional[float] = None) -> float:
    """
    ½ min over correspondences of the distortion, by branch and bound.

    Each step takes the first uncovered point of X (then of Y) and branches over the
    pairs containing it, cheapest first; a branch dies once its partial distortion
    reaches the incumbent.

    Args:
        nx, ny: nets with |nx|·|ny| ≤ 20
        incumbent: a known achievable distortion used as the initial bound

    Returns:
        The exact GH value ½·min dist(R)
    """
    if len(nx) * len(ny) > EXHAUSTIVE_LIMIT:
        raise ExhaustiveLimitError(
            f"|nx|·|ny| = {len(nx) * len(ny)} exceeds {EXHAUSTIVE_LIMIT}; use gh_local_search",
            details={"nx": len(nx), "ny": len(ny)},
        )
    if not _check_sizes(nx, ny):
        return 0.0
    sx, sy = _signed(nx), _signed(ny)
    n_x, n_y = len(nx), len(ny)
    cost = np.abs(sx[:, None, :, None] - sy[None, :, None, :])
    best = [math.inf if incumbent is None else float(incumbent) + IMPROVEMENT_SLACK]
    chosen: List[Pair] = []

    def branch(covered_x: int, covered_y: int, current: float) -> None:
        if current >= best[0]:
            return
        free_x = next((i for i in range(n_x) if not covered_x >> i & 1), None)
        if free_x is not None:
            options = [(free_x, j) for j in range(n_y)]
        else:
            free_y = next((j for j in range(n_y) if not covered_y >> j & 1), None)
            if free_y is None:
                best[0] = current
                return
            options = [(i, free_y) for i in range(n_x)]
        scored = []
        for i, j in options:
            step = max((cost[a, b, i, j] for a, b in chosen), default=0.0)
            scored.append((max(current, float(step)), i, j))
        scored.sort()
        for value, i, j in scored:
            if value >= best[0]:
                break
            chosen.append((i, j))
            branch(covered_x | 1 << i, covered_y | 1 << j, value)
            chosen.pop()

    branch(0, 0, 0.0)
    if math.isinf(best[0]):
        raise PreconditionError("no correspondence found")
    result = min(best[0], float(incumbent)) if incumbent is not None else best[0]
    return 0.5 * result


def _greedy_start(nx: FiniteNet, ny: FiniteNet) -> List[Pair]:
    """Pair each point with its nearest partner in time, then in space, covering both sides."""
    tx = np.array([e.t for e in nx.points])
    xx = np.array([e.x for e in nx.points])
    ty = np.array([e.t for e in ny.points])
    xy = np.array([e.x for e in ny.points])
    pairs = set()
    for i in range(len(nx)):
        j = int(np.lexsort((np.abs(xy - xx[i]), np.abs(ty - tx[i])))[0])
        pairs.add((i, j))
    covered = {j for _, j in pairs}
    for j in range(len(ny)):
        if j not in covered:
            i = int(np.lexsort((np.abs(xx - xy[j]), np.abs(tx - ty[j])))[0])
            pairs.add((i, j))
    return sorted(pairs)


def _random_start(n_x: int, n_y: int, rng: np.random.Generator) -> List[Pair]:
    pairs = {(i, int(rng.integers(n_y))) for i in range(n_x)}
    covered = {j for _, j in pairs}
    pairs |= {(int(rng.integers(n_x)), j) for j in range(n_y) if j not in covered}
    return sorted(pairs)


def minimal_correspondences(n_x: int, n_y: int) -> Iterator[List[Pair]]:
    """
    Every minimal correspondence between index ranges of sizes n_x and n_y, once each.

    A minimal correspondence is a disjoint union of stars. The first uncovered x picks its
    star: a single pair, an x-centered star, or a leaf of a y-centered star. Choices that
    leave uncovered points on only one side are skipped, so every branch completes.
    """
    if n_x < 1 or n_y < 1:
        return

    def extend(free_x: Tuple[int, ...], free_y: Tuple[int, ...], chosen: List[Pair]) -> Iterator[List[Pair]]:
        if not free_x:
            yield sorted(chosen)
            return
        v, rest_x = free_x[0], free_x[1:]
        for size in range(1, len(free_y) + 1):
            for leaves in combinations(free_y, size):
                left_y = tuple(j for j in free_y if j not in leaves)
                if bool(rest_x) == bool(left_y):
                    yield from extend(rest_x, left_y, chosen + [(v, j) for j in leaves])
        for center in free_y:
            left_y = tuple(j for j in free_y if j != center)
            for size in range(1, len(rest_x) + 1):
                for others in combinations(rest_x, size):
                    left_x = tuple(i for i in rest_x if i not in others)
                    if bool(left_x) == bool(left_y):
                        yield from extend(left_x, left_y, chosen + [(i, center) for i in (v,) + others])

    yield from extend(tuple(range(n_x)), tuple(range(n_y)), [])


def _enumerated_starts(n_x: int, n_y: int, restarts: int) -> Optional[List[List[Pair]]]:
    """All minimal correspondences when there are at most `restarts` of them, else None."""
    if n_x * n_y > START_ENUMERATION_LIMIT:
        return None
    pool = list(islice(minimal_correspondences(n_x, n_y), restarts + 1))
    return pool if len(pool) <= restarts else None


class _LocalSearch:
    """Best-improvement descent on (max, mean) pair cost with add, remove and swap moves."""

    def __init__(self, sx: np.ndarray, sy: np.ndarray):
        self.sx = sx
        self.sy = sy
        self.n_x = len(sx)
        self.n_y = len(sy)
        grid_i, grid_j = np.meshgrid(np.arange(self.n_x), np.arange(self.n_y), indexing="ij")
        self.cand_i = grid_i.ravel()
        self.cand_j = grid_j.ravel()

    def _excluded_max(self, matrix: np.ndarray) -> np.ndarray:
        """For each k, the max of the matrix with row and column k removed."""
        m = len(matrix)
        top = matrix.max()
        out = np.full(m, top)
        rows, cols = np.nonzero(matrix == top)
        critical = set(rows.tolist()) | set(cols.tolist())
        for k in critical:
            if np.all((rows == k) | (cols == k)):
                keep = np.arange(m) != k
                out[k] = matrix[np.ix_(keep, keep)].max(initial=0.0)
        return out

    def run(self, pairs: List[Pair], rng: np.random.Generator) -> Tuple[float, List[Pair]]:
        xs = np.array([i for i, _ in pairs], dtype=int)
        ys = np.array([j for _, j in pairs], dtype=int)
        for iteration in range(MAX_SEARCH_ITERATIONS):
            matrix = _pair_costs(self.sx, self.sy, xs, ys)
            m = len(xs)
            cur_max = float(matrix.max())
            total = float(matrix.sum())
            cur_mean = total / (m * m)
            row_sum = matrix.sum(axis=1)
            count_x = np.bincount(xs, minlength=self.n_x)
            count_y = np.bincount(ys, minlength=self.n_y)
            present = np.zeros((self.n_x, self.n_y), dtype=bool)
            present[xs, ys] = True

            cand = ~present[self.cand_i, self.cand_j]
            ci, cj = self.cand_i[cand], self.cand_j[cand]
            rows = np.abs(self.sx[np.ix_(ci, xs)] - self.sy[np.ix_(cj, ys)])
            # columns: new max, new mean, dropped pair slot or -1, added candidate slot or -1
            blocks: List[np.ndarray] = []
            if len(ci):
                add_max = np.maximum(cur_max, rows.max(axis=1))
                add_mean = (total + 2 * rows.sum(axis=1)) / ((m + 1) ** 2)
                blocks.append(np.column_stack([add_max, add_mean, np.full(len(ci), -1), np.arange(len(ci))]))

            excluded = self._excluded_max(matrix)
            removable = np.nonzero((count_x[xs] > 1) & (count_y[ys] > 1))[0]
            if m > 1 and len(removable):
                blocks.append(np.column_stack([
                    excluded[removable],
                    (total - 2 * row_sum[removable]) / ((m - 1) ** 2),
                    removable,
                    np.full(len(removable), -1),
                ]))

            if len(ci):
                order = np.argsort(rows, axis=1)
                first = rows[np.arange(len(ci)), order[:, -1]]
                second = rows[np.arange(len(ci)), order[:, -2]] if m > 1 else np.zeros(len(ci))
                candidate_sum = rows.sum(axis=1)
                for k in range(m):
                    keeps_x = (count_x[xs[k]] > 1) | (ci == xs[k])
                    keeps_y = (count_y[ys[k]] > 1) | (cj == ys[k])
                    ok = np.nonzero(keeps_x & keeps_y)[0]
                    if not len(ok):
                        continue
                    row_max = np.where(order[ok, -1] == k, second[ok], first[ok])
                    swap_max = np.maximum(excluded[k], row_max)
                    swap_mean = (total - 2 * row_sum[k] + 2 * (candidate_sum[ok] - rows[ok, k])) / (m * m)
                    blocks.append(np.column_stack([swap_max, swap_mean, np.full(len(ok), k), ok]))

            if not blocks:
                break
            moves = np.concatenate(blocks)
            moves = moves[rng.permutation(len(moves))]
            pick = np.lexsort((moves[:, 1], moves[:, 0]))[0]
            new_max, new_mean = float(moves[pick, 0]), float(moves[pick, 1])
            drop, add = int(moves[pick, 2]), int(moves[pick, 3])
            better = new_max < cur_max - IMPROVEMENT_SLACK or (
                new_max <= cur_max + IMPROVEMENT_SLACK and new_mean < cur_mean - IMPROVEMENT_SLACK)
            if not better:
                break
            keep = np.arange(m) != drop
            xs, ys = xs[keep], ys[keep]
            if add >= 0:
                xs = np.append(xs, ci[add])
                ys = np.append(ys, cj[add])
            LOGGER.debug("iteration %d: max %s mean %s", iteration, new_max, new_mean)
        else:
            LOGGER.warning("local search stopped at the iteration cap %d", MAX_SEARCH_ITERATIONS)
        final = float(_pair_costs(self.sx, self.sy, xs, ys).max())
        return final, sorted(zip(xs.tolist(), ys.tolist()))


def default_threads() -> int:
    value = os.getenv("LORLAB_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            LOGGER.warning("ignoring non-integer LORLAB_THREADS=%r", value)
    return os.cpu_count() or 1


def local_search_correspondence(nx: FiniteNet, ny: FiniteNet, restarts: int = 4, seed: int = 0,
                                threads: Optional[int] = None) -> Tuple[float, Correspondence]:
    """
    Best correspondence found over the greedy start and `restarts` further starts.

    The further starts are seeded random correspondences, or every minimal correspondence
    when there are no more of those than `restarts`. Descent never raises the maximum, so
    in that case the optimum is reached.

    Returns:
        (distortion, correspondence); reproducible for a fixed seed at any thread count
    """
    if restarts < 0:
        raise PreconditionError(f"restarts must be non-negative, got {restarts}")
    if not _check_sizes(nx, ny):
        return 0.0, Correspondence(frozenset(), 0, 0)
    search = _LocalSearch(_signed(nx), _signed(ny))
    enumerated = _enumerated_starts(len(nx), len(ny), restarts)
    attempts = 1 + (len(enumerated) if enumerated is not None else restarts)
    if enumerated is not None:
        LOGGER.debug("restarting from all %d minimal correspondences", len(enumerated))
    streams = np.random.SeedSequence(seed).spawn(attempts)

    def attempt(index: int) -> Tuple[float, int, List[Pair]]:
        rng = np.random.default_rng(streams[index])
        if index == 0:
            start = _greedy_start(nx, ny)
        elif enumerated is not None:
            start = enumerated[index - 1]
        else:
            start = _random_start(len(nx), len(ny), rng)
        value, pairs = search.run(start, rng)
        LOGGER.debug("restart %d finished at %s", index, value)
        return value, index, pairs

    workers = min(threads or default_threads(), attempts)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(attempt, range(attempts)))
    value, _, pairs = min(results, key=lambda r: (r[0], r[1]))
    return value, Correspondence(frozenset(pairs), len(nx), len(ny))


def gh_local_search(nx: FiniteNet, ny: FiniteNet, restarts: int = 4, seed: int = 0,
                    threads: Optional[int] = None) -> float:
    """Upper bound ½·dist(R) from the best correspondence the local search finds."""
    value, _ = local_search_correspondence(nx, ny, restarts, seed, threads)
    return 0.5 * value


def _greedy_count(dist: np.ndarray, radius: float) -> int:
    covered = np.zeros(len(dist), dtype=bool)
    count = 0
    for i in range(len(dist)):
        if not covered[i]:
            count += 1
            covered |= dist[i] <= radius
    return count


def _radius_candidates(metric: MetricNet) -> np.ndarray:
    values = np.unique(metric.dist)
    if len(values) > MAX_RADIUS_CANDIDATES:
        picks = np.linspace(0, len(values) - 1, MAX_RADIUS_CANDIDATES).round().astype(int)
        values = values[np.unique(picks)]
    return values


def _covering_obstruction(first: MetricNet, second: MetricNet) -> float:
    """
    Largest (r − 2s)/4 with G_first(r) > G_second(s).

    Greedy centers at radius r are pairwise farther than r, so covering the first net
    by balls of radius below r/2 needs at least G_first(r) of them; a correspondence of
    distortion δ turns the second net's s-cover into an (s + δ)-cover of the first.
    """
    if not len(first) or not len(second):
        return 0.0
    s_values = _radius_candidates(second)
    s_counts = np.array([_greedy_count(second.dist, s) for s in s_values])
    # smallest s reaching each count, then the smallest s with count strictly below c
    smallest = np.full(len(second) + 2, math.inf)
    for s, count in zip(s_values, s_counts):
        smallest[count] = min(smallest[count], s)
    below = np.minimum.accumulate(smallest)
    bound = 0.0
    for r in _radius_candidates(first):
        count = _greedy_count(first.dist, r)
        s = below[min(count - 1, len(below) - 1)]
        if math.isfinite(s) and r > 2 * s:
            bound = max(bound, (r - 2 * s) / 4)
    return bound


def gh_lower_noldus(nx: FiniteNet, ny: FiniteNet) -> float:
    """
    ½ of a metric GH lower bound between the Noldus metric nets.

    The metric bound is the larger of ½|diam difference| and the covering obstruction
    in either direction. Discretized Noldus distances are used as given.
    """
    mx, my = noldus_metric_net(nx), noldus_metric_net(ny)
    diameter_bound = 0.5 * abs(mx.diameter - my.diameter)
    obstruction = max(_covering_obstruction(mx, my), _covering_obstruction(my, mx))
    LOGGER.debug("noldus lower bound: diameters %s, covering %s", diameter_bound, obstruction)
    return 0.5 * max(diameter_bound, obstruction)


def p_sweep(p_list: Sequence, n_t: int, n_x: int, height: float = DEFAULT_HEIGHT,
            circumference: float = DEFAULT_CIRCUMFERENCE, restarts: int = 4, seed: int = 0,
            reference=None, threads: Optional[int] = None) -> List[SweepRow]:
    """
    Rows (p, q, upper_closed, upper_search, lower_noldus, mesh_t, mesh_x) for consecutive
    exponents, or for (reference, p) against every entry when a reference is given.
    """
    exponents = [parse_p(p) for p in p_list]
    keys = [math.inf if p is P_INF else p for p in exponents]
    if any(b < a for a, b in zip(keys, keys[1:])):
        raise PreconditionError("pList must be sorted")
    if reference is None:
        pairs = list(zip(exponents, exponents[1:]))
    else:
        reference = parse_p(reference)
        pairs = [(reference, p) for p in exponents]

    nets: Dict[str, FiniteNet] = {}

    def net_for(p: PValue) -> FiniteNet:
        key = format_p(p)
        if key not in nets:
            space = SpaceDescriptor.lorentz_cylinder(p, height, circumference)
            nets[key] = sample_net(space, n_t, n_x)
        return nets[key]

    rows = []
    for p, q in pairs:
        net_p, net_q = net_for(p), net_for(q)
        if p == q:
            row = SweepRow(p, q, 0.0, 0.0, 0.0, net_p.mesh_t, net_p.mesh_x)
        else:
            row = SweepRow(
                p, q,
                gh_identity_upper_cyl(p, q),
                gh_local_search(net_p, net_q, restarts, seed, threads),
                gh_lower_noldus(net_p, net_q),
                net_p.mesh_t, net_p.mesh_x,
            )
        LOGGER.info("p=%s q=%s done", format_p(p), format_p(q))
        rows.append(row)
    return rows


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["p", "q", "upper_closed", "upper_search", "lower_noldus", "mesh_t", "mesh_x"])
    for row in rows:
        writer.writerow([
            format_p(row.p), format_p(row.q),
            format_real(row.upper_closed), format_real(row.upper_search), format_real(row.lower_noldus),
            format_real(row.mesh_t), format_real(row.mesh_x),
        ])
    return buffer.getvalue()
