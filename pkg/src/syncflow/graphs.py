"""Directed weighted graph snapshots, switching schedules, and spectra.

A ``WeightedDigraph`` is one communication snapshot: arc (j, i, w) means node
j is a neighbor of node i, so information flows j -> i and the adjacency
entry A[i, j] = w.  A ``SwitchingSignal`` schedules snapshots over time as a
piecewise-constant, right-continuous map; only fixed and periodic schedules
are supported, which keeps the uniform joint connectivity certificate
exhaustive (the joint graph over a sliding window is piecewise constant in
the window start, with breakpoints at switch times shifted by the period).

The algebraic side provides the graph Laplacian D - A, strong connectivity
via double reachability sweeps, and the second-smallest Laplacian eigenvalue
of symmetric graphs through an in-package cyclic Jacobi eigensolver.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InputError, NumericalError, PreconditionError

__all__ = [
    "WeightedDigraph",
    "FixedSchedule",
    "PeriodicSchedule",
    "SwitchingSignal",
    "JointGraph",
    "UJSCCertificate",
    "laplacian",
    "is_strongly_connected",
    "joint_graph",
    "certify_ujsc",
    "jacobi_eigenvalues",
    "lambda2",
]

_TIME_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Immutable graph snapshot with positive arc weights and no self-loops."""

    node_count: int
    arcs: tuple = ()

    def __post_init__(self):
        n = int(self.node_count)
        if n < 1:
            raise InputError(f"node_count must be >= 1, got {self.node_count}")
        object.__setattr__(self, "node_count", n)
        seen = set()
        norm = []
        for arc in self.arcs:
            try:
                j, i, w = arc
            except (TypeError, ValueError):
                raise InputError(f"arc must be (source, target, weight), got {arc!r}") from None
            j, i, w = int(j), int(i), float(w)
            if not (0 <= j < n and 0 <= i < n):
                raise InputError(f"arc ({j}, {i}) references a node outside 0..{n - 1}")
            if j == i:
                raise InputError(f"self-loop on node {i} is not allowed")
            if not (w > 0 and np.isfinite(w)):
                raise InputError(f"arc ({j}, {i}) weight must be positive, got {w}")
            if (j, i) in seen:
                raise InputError(f"duplicate arc ({j}, {i})")
            seen.add((j, i))
            norm.append((j, i, w))
        object.__setattr__(self, "arcs", tuple(norm))

    @cached_property
    def adjacency(self) -> np.ndarray:
        """A with A[i, j] = weight of arc j -> i (read-only)."""
        a = np.zeros((self.node_count, self.node_count))
        for j, i, w in self.arcs:
            a[i, j] = w
        a.setflags(write=False)
        return a

    @cached_property
    def laplacian_matrix(self) -> np.ndarray:
        """D - A with D the diagonal of row sums of A (read-only)."""
        a = self.adjacency
        lap = np.diag(a.sum(axis=1)) - a
        lap.setflags(write=False)
        return lap

    @cached_property
    def arc_set(self) -> frozenset:
        return frozenset((j, i) for j, i, _ in self.arcs)

    def neighbors(self, i: int) -> list[int]:
        """Sources j whose state node i receives."""
        return [j for j, tgt, _ in self.arcs if tgt == i]

    def is_symmetric(self) -> bool:
        """True iff arcs come in (j, i) / (i, j) pairs with equal weights."""
        weights = {(j, i): w for j, i, w in self.arcs}
        return all(weights.get((i, j)) == w for (j, i), w in weights.items())


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """Graph Laplacian D - A; every row sums to zero."""
    return g.laplacian_matrix


def _reach_all(n: int, out_adj: list[list[int]], start: int) -> bool:
    seen = [False] * n
    seen[start] = True
    stack = [start]
    count = 1
    while stack:
        u = stack.pop()
        for v in out_adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == n


def _strongly_connected(n: int, arc_pairs) -> bool:
    fwd: list[list[int]] = [[] for _ in range(n)]
    bwd: list[list[int]] = [[] for _ in range(n)]
    for j, i in arc_pairs:
        fwd[j].append(i)
        bwd[i].append(j)
    return _reach_all(n, fwd, 0) and _reach_all(n, bwd, 0)


def is_strongly_connected(g: WeightedDigraph) -> bool:
    """Every ordered node pair is joined by a directed path.

    Double reachability sweep from node 0: forward reach plus reverse reach
    covering all nodes is equivalent to strong connectivity.
    """
    return _strongly_connected(g.node_count, g.arc_set)


# -- switching schedules -----------------------------------------------------


@dataclass(frozen=True)
class FixedSchedule:
    graph_id: str


@dataclass(frozen=True)
class PeriodicSchedule:
    segments: tuple  # ((graph_id, duration), ...) repeated over [0, inf)

    def __post_init__(self):
        segs = tuple((str(g), float(d)) for g, d in self.segments)
        if not segs:
            raise InputError("periodic schedule needs at least one segment")
        if any(d <= 0 for _, d in segs):
            raise InputError("segment durations must be positive")
        object.__setattr__(self, "segments", segs)


@dataclass(frozen=True, eq=False)
class SwitchingSignal:
    """Piecewise-constant, right-continuous graph schedule sigma(t).

    Immutable after construction; all queries are pure.  The dwell floor is
    the guaranteed minimum time between consecutive switches.
    """

    library: dict
    schedule: object
    dwell_floor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "library", dict(self.library))
        object.__setattr__(self, "dwell_floor", float(self.dwell_floor))
        if not self.library:
            raise InputError("signal library must contain at least one graph")
        if self.dwell_floor <= 0:
            raise InputError(f"dwell floor must be positive, got {self.dwell_floor}")
        counts = {g.node_count for g in self.library.values()}
        if len(counts) != 1:
            raise InputError(f"library graphs must share one node count, got {sorted(counts)}")
        if isinstance(self.schedule, FixedSchedule):
            ids = [self.schedule.graph_id]
        elif isinstance(self.schedule, PeriodicSchedule):
            ids = [g for g, _ in self.schedule.segments]
            bad = [d for _, d in self.schedule.segments if d < self.dwell_floor - 1e-12]
            if bad:
                raise InputError(
                    f"segment duration {min(bad)} is below the dwell floor {self.dwell_floor}"
                )
        else:
            raise InputError(f"unsupported schedule type {type(self.schedule).__name__}")
        missing = [g for g in ids if g not in self.library]
        if missing:
            raise InputError(f"schedule references unknown graph ids {missing}")

    @property
    def node_count(self) -> int:
        return next(iter(self.library.values())).node_count

    @property
    def period(self) -> float:
        if isinstance(self.schedule, FixedSchedule):
            return 0.0
        return sum(d for _, d in self.schedule.segments)

    @cached_property
    def _boundaries(self) -> list:
        """Per-period list of (end_time_within_period, graph_id_of_segment)."""
        if isinstance(self.schedule, FixedSchedule):
            return []
        out = []
        acc = 0.0
        for gid, dur in self.schedule.segments:
            acc += dur
            out.append((acc, gid))
        return out

    def graph_id_at(self, t: float) -> str:
        if t < 0:
            raise InputError(f"time must be nonnegative, got {t}")
        if isinstance(self.schedule, FixedSchedule):
            return self.schedule.graph_id
        period = self.period
        tau = t - math.floor(t / period) * period
        if tau >= period:  # guard the floating wrap
            tau = 0.0
        start = 0.0
        for end, gid in self._boundaries:
            if start - _TIME_TOL <= tau < end - _TIME_TOL:
                return gid
            start = end
        # tau within rounding of the period wraps to the first segment
        return self.schedule.segments[0][0]

    def graph_at(self, t: float) -> WeightedDigraph:
        return self.library[self.graph_id_at(t)]

    def switch_times(self, t0: float, t1: float) -> list[float]:
        """Instants in (t0, t1] where the active graph actually changes."""
        if isinstance(self.schedule, FixedSchedule) or t1 <= t0:
            return []
        segs = self.schedule.segments
        ids = [g for g, _ in segs]
        # boundary within the period is a switch only if the ids differ across it
        changing = []
        for idx, (end, _) in enumerate(self._boundaries):
            nxt = ids[(idx + 1) % len(ids)]
            if ids[idx] != nxt:
                changing.append(end)
        if not changing:
            return []
        period = self.period
        out = []
        k = max(0, math.floor(t0 / period) - 1)
        while True:
            base = k * period
            if base > t1 + _TIME_TOL:
                break
            for c in changing:
                t = base + c
                if t0 + _TIME_TOL < t <= t1 + _TIME_TOL:
                    out.append(min(t, t1))
            k += 1
        return out

    def has_switches(self) -> bool:
        if isinstance(self.schedule, FixedSchedule):
            return False
        return bool(self.switch_times(0.0, 2.0 * self.period))


@dataclass(frozen=True, eq=False)
class JointGraph:
    """Union of all arcs active anywhere in a time window (weights ignored)."""

    window: tuple
    node_count: int
    union_arcs: frozenset

    def is_strongly_connected(self) -> bool:
        return _strongly_connected(self.node_count, self.union_arcs)


def joint_graph(signal: SwitchingSignal, t1: float, t2: float) -> JointGraph:
    """Arc union of every graph active in [t1, t2)."""
    if not t1 < t2:
        raise InputError(f"window requires t1 < t2, got [{t1}, {t2})")
    arcs: set = set()
    if isinstance(signal.schedule, FixedSchedule) or t2 - t1 >= signal.period - _TIME_TOL:
        ids = (
            [signal.schedule.graph_id]
            if isinstance(signal.schedule, FixedSchedule)
            else [g for g, _ in signal.schedule.segments]
        )
        for gid in ids:
            arcs |= signal.library[gid].arc_set
        return JointGraph((t1, t2), signal.node_count, frozenset(arcs))
    t = t1
    period = signal.period
    while t < t2 - _TIME_TOL:
        arcs |= signal.graph_at(t).arc_set
        # advance to the next segment boundary after t
        tau = t - math.floor(t / period) * period
        nxt = None
        for end, _ in signal._boundaries:
            if end > tau + _TIME_TOL:
                nxt = end
                break
        if nxt is None:
            nxt = period
        t = t - tau + nxt
    return JointGraph((t1, t2), signal.node_count, frozenset(arcs))


@dataclass(frozen=True)
class UJSCCertificate:
    ok: bool
    window: tuple | None
    detail: str

    def __bool__(self) -> bool:
        return self.ok


def certify_ujsc(signal: SwitchingSignal, T: float, horizon: float) -> UJSCCertificate:
    """Certify that every window [t, t+T) has a strongly connected joint graph.

    For a periodic schedule the joint graph over [t, t+T) is piecewise
    constant in t with breakpoints at segment boundaries and at boundaries
    shifted left by T (mod period), so checking each breakpoint plus the
    midpoints between consecutive breakpoints within one period is
    exhaustive.  The first failing window, if any, is reported as a witness.
    """
    if T <= 0:
        raise InputError(f"window length T must be positive, got {T}")
    period = signal.period
    if horizon < period + T - _TIME_TOL:
        raise PreconditionError(
            f"horizon {horizon} must cover one schedule period plus T ({period + T})"
        )
    if isinstance(signal.schedule, FixedSchedule) or not signal.has_switches():
        g = signal.graph_at(0.0)
        ok = is_strongly_connected(g)
        return UJSCCertificate(
            ok, None if ok else (0.0, T), "fixed graph" if ok else "fixed graph not strongly connected"
        )
    breakpoints = {0.0}
    for end, _ in signal._boundaries:
        breakpoints.add(end % period)
        breakpoints.add((end - T) % period)
    pts = sorted(breakpoints)
    starts = list(pts)
    for a, b in zip(pts, pts[1:] + [pts[0] + period]):
        starts.append(0.5 * (a + b))
    for t in sorted(starts):
        jg = joint_graph(signal, t, t + T)
        if not jg.is_strongly_connected():
            return UJSCCertificate(
                False,
                (t, t + T),
                f"joint graph over [{t:.6g}, {t + T:.6g}) is not strongly connected",
            )
    return UJSCCertificate(True, None, f"checked {len(starts)} window starts over one period")


# -- spectra -----------------------------------------------------------------


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise InputError(f"matrix must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise InputError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if n == 1:
        return a.reshape(1).copy()
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.tril(a, -1) ** 2))) * math.sqrt(2.0)
        if off <= tol * scale * n:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    raise NumericalError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def lambda2(g: WeightedDigraph) -> float:
    """Second-smallest eigenvalue of the Laplacian of a symmetric connected graph."""
    if g.node_count < 2:
        raise PreconditionError("lambda2 needs at least two nodes")
    if not g.is_symmetric():
        raise PreconditionError("lambda2 requires a symmetric graph (paired equal-weight arcs)")
    if not is_strongly_connected(g):
        raise PreconditionError("lambda2 requires a connected graph")
    eig = jacobi_eigenvalues(np.array(g.laplacian_matrix))
    return float(eig[1])
