"""Trajectory diagnostics and executable synchronization checks.

This module turns the synchronization theory into runtime verdicts on
simulated trajectories:

* diagnostics: pairwise diameter, the max-type Lyapunov series V (squared
  distance to a common zero point) and theta (squared distance to the hull of
  the union of zero sets), and per-node distance to each argmin set;
* monotonicity, common-limit, and node-optimum checks on those series;
* the aggregate potential over a fixed undirected graph, its minimizer via
  gradient descent (the gradient is exactly the negated coupled vector
  field, which doubles as a cross-module identity), and the spectral
  disagreement bound at a minimizer;
* exact-synchronization iff-checks, coupling-gain sweeps, assumption
  feasibility certification, and the one-dimensional invariant-cube test.

Finite-horizon proxies: a "tail" quantity is taken over the last
``tail_fraction`` of the horizon (default the last 20%).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import convex_geometry as cg
from .errors import InputError, NumericalError, PreconditionError
from .graphs import SwitchingSignal, WeightedDigraph, is_strongly_connected, lambda2
from .potentials import common_zero_set
from .report import CheckReport
from .simulator import NetworkState, Trajectory, fixed_signal, integrate, rhs

__all__ = [
    "DiagnosticsSeries",
    "SyncVerdict",
    "SweepResult",
    "diagnostics",
    "diameter_series",
    "sync_verdict",
    "check_monotone",
    "check_common_limit",
    "check_node_optimum",
    "aggregate_potential",
    "minimize_aggregate",
    "check_spectral_bound",
    "check_sync_iff",
    "sweep_K",
    "check_feasibility",
    "check_invariant_cube",
    "cube_containment",
]

DEFAULT_TAIL_FRACTION = 0.2


@dataclass(frozen=True, eq=False)
class DiagnosticsSeries:
    """Per-sample diagnostic series aligned with a trajectory.

    ``v_nodes``/``v`` are present only when a reference common zero point is
    available; ``theta`` needs only bounded zero sets and is always computed.
    """

    times: np.ndarray
    diameter: np.ndarray
    theta: np.ndarray
    argmin_dist: np.ndarray  # (n_samples, N)
    v_nodes: np.ndarray | None = None  # (n_samples, N)
    v: np.ndarray | None = None
    z_star: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class SyncVerdict:
    exact_sync: bool
    epsilon_estimate: float
    limit_point: np.ndarray | None


def _tail_indices(times: np.ndarray, tail_fraction: float) -> np.ndarray:
    if not 0 < tail_fraction <= 1:
        raise InputError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    horizon = times[-1]
    idx = np.nonzero(times >= horizon * (1.0 - tail_fraction) - 1e-12)[0]
    return idx


def diameter_series(traj: Trajectory) -> np.ndarray:
    """max_{i,j} |x_i - x_j| per sample."""
    X = traj.blocks()
    n = traj.node_count
    diam = np.zeros(len(traj))
    for i in range(n):
        for j in range(i + 1, n):
            d = np.linalg.norm(X[:, i, :] - X[:, j, :], axis=1)
            diam = np.maximum(diam, d)
    return diam


def diagnostics(traj: Trajectory, potentials, z_star="auto") -> DiagnosticsSeries:
    """Compute all diagnostic series for a completed trajectory.

    ``z_star`` may be an explicit reference point, ``"auto"`` to use the
    centroid of the intersection of zero sets (an error if that intersection
    is empty), or ``None`` to skip the V series.
    """
    X = traj.blocks()
    diam = diameter_series(traj)

    theta_body = cg.zero_set_hull(potentials)
    theta = np.zeros(len(traj))
    for i in range(traj.node_count):
        theta = np.maximum(theta, theta_body.distance_many(X[:, i, :]) ** 2)

    argmin_dist = np.empty((len(traj), traj.node_count))
    for i, p in enumerate(potentials):
        argmin_dist[:, i] = p.zero_set().distance_many(X[:, i, :])

    v_nodes = v = z = None
    if z_star is not None:
        if isinstance(z_star, str) and z_star == "auto":
            body = common_zero_set(potentials)
            if body is None:
                raise PreconditionError(
                    "auto z_star requires a nonempty intersection of zero sets; "
                    "supply z_star explicitly or pass z_star=None to skip the V series"
                )
            z = body.center()
        else:
            z = np.atleast_1d(np.asarray(z_star, dtype=float))
            if z.shape != (traj.dim,):
                raise InputError(f"z_star has shape {z.shape}, expected ({traj.dim},)")
        v_nodes = np.linalg.norm(X - z, axis=2) ** 2
        v = v_nodes.max(axis=1)

    return DiagnosticsSeries(
        times=traj.times,
        diameter=diam,
        theta=theta,
        argmin_dist=argmin_dist,
        v_nodes=v_nodes,
        v=v,
        z_star=z,
    )


def sync_verdict(
    traj: Trajectory,
    tol: float = 1e-6,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
) -> SyncVerdict:
    """Exact-synchronization verdict plus the tail-sup disagreement estimate."""
    diam = diameter_series(traj)
    tail = _tail_indices(traj.times, tail_fraction)
    eps = float(diam[tail].max())
    exact = eps < tol
    limit = traj.blocks()[-1].mean(axis=0) if exact else None
    return SyncVerdict(exact_sync=exact, epsilon_estimate=eps, limit_point=limit)


def check_monotone(series, rise_tol: float | None = None, label: str = "series") -> CheckReport:
    """Pass iff series[k+1] <= series[k] + rise_tol for every k.

    The default tolerance 1e-8 * max(1, series[0]) absorbs integrator error;
    the report carries the worst rise and where it happened.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 1 or s.shape[0] < 2:
        raise InputError("monotonicity check needs a 1-D series with >= 2 samples")
    if rise_tol is None:
        rise_tol = 1e-8 * max(1.0, float(s[0]))
    if rise_tol < 0:
        raise InputError("rise_tol must be nonnegative")
    rises = np.diff(s)
    k = int(np.argmax(rises))
    worst = float(rises[k])
    return CheckReport(
        check=f"monotone_{label}",
        passed=worst <= rise_tol,
        worst_value=worst,
        location={"index": k},
        params={"rise_tol": rise_tol, "length": int(s.shape[0])},
    )


def check_common_limit(
    diag: DiagnosticsSeries,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    tol: float = 1e-6,
) -> CheckReport:
    """All V_i settle to one common limit.

    Over the tail window the spread max_i V_i - min_i V_i and every node's
    oscillation must stay within ``tol``.  The common limit estimate is the
    tail mean of V.
    """
    if diag.v_nodes is None:
        raise PreconditionError("check_common_limit needs the V series (a reference z_star)")
    tail = _tail_indices(diag.times, tail_fraction)
    if tail.shape[0] < 10:
        raise PreconditionError(
            f"tail window holds {tail.shape[0]} samples; need >= 10 for a limit estimate"
        )
    vt = diag.v_nodes[tail]
    spread = float((vt.max(axis=1) - vt.min(axis=1)).max())
    osc = vt.max(axis=0) - vt.min(axis=0)
    worst = max(spread, float(osc.max()))
    d_star_sq = float(diag.v[tail].mean())
    return CheckReport(
        check="common_limit",
        passed=worst <= tol,
        worst_value=worst,
        location={"worst_node_oscillation": int(np.argmax(osc))},
        params={
            "tol": tol,
            "tail_fraction": tail_fraction,
            "spread": spread,
            "d_star_estimate": math.sqrt(max(d_star_sq, 0.0)),
        },
    )


def check_node_optimum(
    diag: DiagnosticsSeries,
    potentials,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    tol: float = 1e-6,
) -> CheckReport:
    """Tail-sup of every node's distance to its own argmin set is below ``tol``."""
    if diag.argmin_dist.shape[1] != len(potentials):
        raise InputError("diagnostics and potentials disagree on node count")
    tail = _tail_indices(diag.times, tail_fraction)
    sup_per_node = diag.argmin_dist[tail].max(axis=0)
    worst_node = int(np.argmax(sup_per_node))
    worst = float(sup_per_node[worst_node])
    return CheckReport(
        check="node_optimum",
        passed=worst <= tol,
        worst_value=worst,
        location={"node": worst_node},
        params={"tol": tol, "tail_fraction": tail_fraction},
    )


# -- aggregate potential over a fixed undirected graph ----------------------


def _require_symmetric(g: WeightedDigraph, op: str):
    if not g.is_symmetric():
        raise PreconditionError(f"{op} requires a symmetric (undirected) graph")


def aggregate_potential(potentials, g: WeightedDigraph, K: float, x) -> float:
    """sum_i F_i(x_i) + (K/2) sum_{edges} a_ij |x_j - x_i|^2 (undirected g)."""
    _require_symmetric(g, "aggregate_potential")
    m = potentials[0].dimension
    X = np.asarray(x, dtype=float).reshape(g.node_count, m)
    val = sum(p.value(X[i]) for i, p in enumerate(potentials))
    lap = g.laplacian_matrix
    # for symmetric weights, x'(L kron I)x equals the unordered-edge sum
    val += 0.5 * K * float(np.sum(X * (lap @ X)))
    return val


def minimize_aggregate(
    potentials,
    g: WeightedDigraph,
    K: float,
    x_init,
    tol: float = 1e-8,
    max_iter: int = 200000,
) -> np.ndarray:
    """Minimize the aggregate potential by gradient descent with backtracking.

    The descent direction is the coupled vector field itself (its negation is
    exactly the gradient of the aggregate potential on an undirected graph),
    so agreement between this routine and the simulator is a structural
    identity, not a coincidence.

    Armijo backtracking compares function values, whose resolution is limited
    to roughly machine epsilon times the value scale; once the requested
    decrease drops below that floor the search switches to fixed steps sized
    from a local curvature estimate, driven by the gradient norm alone, which
    stays meaningful down to ~1e-13.
    """
    _require_symmetric(g, "minimize_aggregate")
    if K < 0:
        raise InputError(f"K must be nonnegative, got {K}")
    sig = fixed_signal(g)

    def grad_at(y: np.ndarray) -> np.ndarray:
        return -rhs(potentials, sig, K, NetworkState(0.0, y))

    x = np.asarray(x_init, dtype=float).ravel().copy()
    fval = aggregate_potential(potentials, g, K, x)
    noise_floor = 64.0 * np.finfo(float).eps * max(1.0, abs(fval))
    step = 1.0
    budget = max_iter
    gnorm = math.inf
    while budget > 0:
        budget -= 1
        grad = grad_at(x)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return x
        step = min(step * 2.0, 1e6)
        stalled = False
        while True:
            x_new = x - step * grad
            f_new = aggregate_potential(potentials, g, K, x_new)
            need = 1e-4 * step * gnorm * gnorm
            if f_new <= fval - need:
                break
            if need <= noise_floor:
                stalled = True  # requested decrease is unresolvable in floats
                break
            step *= 0.5
            if step < 1e-18:
                stalled = True
                break
        if stalled:
            break
        x, fval = x_new, f_new
    else:
        raise NumericalError(
            f"minimize_aggregate exhausted {max_iter} iterations; final gradient norm "
            f"{gnorm:.3e} (target {tol:.1e})"
        )

    # fixed-step refinement: step 1/L from a directional curvature estimate,
    # halved whenever the gradient norm stops contracting
    grad = grad_at(x)
    gnorm = float(np.linalg.norm(grad))
    if gnorm <= tol:
        return x
    delta = 1e-5 * max(1.0, float(np.linalg.norm(x)))
    lip = float(np.linalg.norm(grad - grad_at(x - delta * grad / gnorm))) / delta
    h = 1.0 / max(lip, 1e-12)
    best_x, best_g = x.copy(), gnorm
    since_improve = 0
    while budget > 0:
        budget -= 1
        x = x - h * grad
        grad = grad_at(x)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return x
        if gnorm < best_g * (1.0 - 1e-12):
            best_x, best_g = x.copy(), gnorm
            since_improve = 0
        else:
            since_improve += 1
            if gnorm > 2.0 * best_g or since_improve > 200:
                h *= 0.5
                x, grad, gnorm = best_x.copy(), grad_at(best_x), best_g
                since_improve = 0
                if h < 1e-18:
                    break
    raise NumericalError(
        f"minimize_aggregate exhausted {max_iter} iterations; final gradient norm "
        f"{best_g:.3e} (target {tol:.1e})"
    )


def check_spectral_bound(
    p,
    potentials,
    g: WeightedDigraph,
    K: float,
    tol: float = 1e-8,
    grad_tol: float = 1e-6,
) -> CheckReport:
    """Disagreement of a minimizer against the spectral-gap bound.

    With p a minimizer of the aggregate potential, the blockwise deviation
    from the block average must satisfy
    sum_i |p_i - p_ave|^2 <= (drift_norm / (K * lambda2))^2, where drift_norm
    is the norm of the stacked self-gradients at p and lambda2 the
    second-smallest Laplacian eigenvalue of the (symmetric, connected) graph.
    """
    if K <= 0:
        raise PreconditionError("spectral bound needs K > 0")
    _require_symmetric(g, "check_spectral_bound")
    if not is_strongly_connected(g):
        raise PreconditionError("check_spectral_bound requires a connected graph")
    m = potentials[0].dimension
    P = np.asarray(p, dtype=float).reshape(g.node_count, m)
    grad = -rhs(potentials, fixed_signal(g), K, NetworkState(0.0, P.ravel()))
    gnorm = float(np.linalg.norm(grad))
    if gnorm > grad_tol:
        raise PreconditionError(
            f"p is not a minimizer: |grad F_G(p)| = {gnorm:.3e} > {grad_tol:.1e}"
        )
    p_ave = P.mean(axis=0)
    lhs = float(np.sum((P - p_ave) ** 2))
    l0 = float(np.linalg.norm(np.concatenate([pot.gradient(P[i]) for i, pot in enumerate(potentials)])))
    lam2 = lambda2(g)
    bound = (l0 / (K * lam2)) ** 2
    return CheckReport(
        check="spectral_bound",
        passed=lhs <= bound + tol,
        worst_value=lhs - bound,
        location=None,
        params={"lhs": lhs, "bound": bound, "drift_norm": l0, "lambda2": lam2, "K": K, "tol": tol},
    )


# -- scenario-level orchestration --------------------------------------------


def check_sync_iff(
    potentials,
    g: WeightedDigraph,
    K: float,
    x0_set,
    horizon: float,
    tol: float,
    dt: float = 0.01,
    sample_every: float | None = None,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    min_floor: float = 1e-9,
) -> CheckReport:
    """Exact synchronization iff the zero sets intersect, on a fixed graph.

    With a nonempty intersection every run must reach tail diameter <= tol
    and end within tol of the intersection; with an empty intersection every
    run's tail diameter must stay at or above ``min_floor`` (the observed
    floor is reported, never assumed).
    """
    _require_symmetric(g, "check_sync_iff")
    if not is_strongly_connected(g):
        raise PreconditionError("check_sync_iff requires a connected graph")
    if sample_every is None:
        sample_every = 10.0 * dt
    body = common_zero_set(potentials)
    sig = fixed_signal(g)
    runs = []
    all_pass = True
    worst = -math.inf
    for ridx, x0 in enumerate(x0_set):
        traj = integrate(potentials, sig, K, x0, dt, horizon, sample_every)
        diam = diameter_series(traj)
        tail = _tail_indices(traj.times, tail_fraction)
        entry: dict = {"run": ridx}
        if body is not None:
            tail_sup = float(diam[tail].max())
            final_dev = float(
                max(body.distance(traj.blocks()[-1, i]) for i in range(traj.node_count))
            )
            ok = tail_sup <= tol and final_dev <= tol
            entry.update({"tail_diameter": tail_sup, "final_deviation": final_dev, "pass": ok})
            worst = max(worst, tail_sup, final_dev)
        else:
            floor = float(diam[tail].min())
            ok = floor >= min_floor
            entry.update({"observed_floor": floor, "pass": ok})
            worst = max(worst, -floor)
        all_pass = all_pass and ok
        runs.append(entry)
    return CheckReport(
        check="sync_iff_common_zero",
        passed=all_pass,
        worst_value=None if worst == -math.inf else worst,
        location=None,
        params={
            "intersection_nonempty": body is not None,
            "tol": tol,
            "min_floor": min_floor,
            "runs": runs,
        },
    )


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Per-gain disagreement estimates from a coupling sweep."""

    rows: tuple  # ((K, epsilon_estimate | None, error | None), ...)
    epsilon: float
    passed: bool
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "rows": [
                {"K": k, "epsilon_estimate": e, "error": err} for (k, e, err) in self.rows
            ],
            "epsilon": self.epsilon,
            "pass": self.passed,
            "params": self.params,
        }


def _max_workers(n_jobs: int, max_threads: int | None) -> int:
    if max_threads is None:
        env = os.environ.get("SYNCFLOW_THREADS")
        max_threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(n_jobs, max_threads))


def sweep_K(
    potentials,
    signal: SwitchingSignal,
    x0,
    K_list,
    epsilon: float,
    dt: float,
    t_end: float,
    sample_every: float | None = None,
    tail_fraction: float = DEFAULT_TAIL_FRACTION,
    max_threads: int | None = None,
) -> SweepResult:
    """Run the scenario once per gain and table the disagreement estimates.

    Passes iff the estimates are non-increasing in K (5% slack) and the
    largest gain achieves an estimate below ``epsilon``.  Runs share only
    immutable data and execute on a thread pool capped by SYNCFLOW_THREADS.
    """
    K_list = [float(k) for k in K_list]
    if not K_list or any(k <= 0 for k in K_list) or any(
        b <= a for a, b in zip(K_list, K_list[1:])
    ):
        raise InputError("K_list must be positive and strictly increasing")
    if sample_every is None:
        sample_every = 10.0 * dt

    def one(k: float):
        try:
            traj = integrate(potentials, signal, k, x0, dt, t_end, sample_every)
            verdict = sync_verdict(traj, tail_fraction=tail_fraction)
            return (k, verdict.epsilon_estimate, None)
        except NumericalError as e:
            return (k, None, str(e))

    with ThreadPoolExecutor(max_workers=_max_workers(len(K_list), max_threads)) as pool:
        rows = tuple(pool.map(one, K_list))

    estimates = [e for _, e, err in rows if err is None]
    ok = len(estimates) == len(rows)
    if ok:
        for a, b in zip(estimates, estimates[1:]):
            if b > a * 1.05 + 1e-12:
                ok = False
                break
        ok = ok and estimates[-1] < epsilon
    return SweepResult(
        rows=rows,
        epsilon=epsilon,
        passed=ok,
        params={"dt": dt, "t_end": t_end, "tail_fraction": tail_fraction},
    )


def check_feasibility(potentials) -> CheckReport:
    """Certify which structural assumptions hold for this catalog.

    Every catalog potential is coercive with a bounded argmin set, which
    certifies the minimizer-boundedness assumption outright.  The projection
    inequality is certified structurally in one dimension; in higher
    dimensions it is only sample-checked on a deterministic cloud around the
    hull of the zero sets, and the report records that distinction.
    """
    m = potentials[0].dimension
    params: dict = {"dimension": m, "minimizer_boundedness": "certified: catalog potentials are coercive"}
    if m == 1:
        params["drift_alignment"] = "certified: one-dimensional state space with bounded zero sets"
        passed = True
    else:
        body = cg.zero_set_hull(potentials)
        pts = body.extreme_points()
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        half = 0.5 * (hi - lo)
        center = 0.5 * (hi + lo)
        rng = np.random.default_rng(0)
        cloud = center + rng.uniform(-1.0, 1.0, size=(256, m)) * (3.0 * half + 1.0)
        sub = cg.check_drift_alignment(potentials, np.vstack([cloud, pts]))
        params["drift_alignment"] = f"sampled on {cloud.shape[0] + pts.shape[0]} points: " + (
            "pass" if sub.passed else "FAIL"
        )
        params["drift_alignment_worst"] = sub.worst_value
        passed = sub.passed
    return CheckReport(
        check="assumption_feasibility",
        passed=passed,
        worst_value=params.get("drift_alignment_worst"),
        location=None,
        params=params,
    )


def cube_containment(
    traj: Trajectory, potentials, eta: float, slack: float = 1e-8
) -> CheckReport:
    """A 1-D trajectory stays in the cube spanned by argmin representatives.

    The cube is [y_lo - eta, y_hi + eta] per node, where y_lo/y_hi are the
    extremes of each node's argmin midpoint.  If the first sample starts
    outside the cube the claim does not apply and the report marks the
    precondition unmet instead of failing the invariance itself.
    """
    if traj.dim != 1:
        raise InputError("invariant cube applies to one-dimensional node states only")
    if eta <= 0:
        raise InputError(f"eta must be positive, got {eta}")
    reps = [float(p.zero_set().center()[0]) for p in potentials]
    lo = min(reps) - eta
    hi = max(reps) + eta
    x0 = traj.states[0]
    if np.any(x0 < lo - 1e-12) or np.any(x0 > hi + 1e-12):
        return CheckReport(
            check="invariant_cube",
            passed=False,
            worst_value=None,
            location="precondition",
            params={
                "precondition_met": False,
                "cube": [lo, hi],
                "detail": "initial state outside the cube; the invariance claim does not apply",
            },
        )
    overflow = np.maximum(traj.states - hi, lo - traj.states)
    k = int(np.argmax(overflow.max(axis=1)))
    worst = float(overflow.max())
    return CheckReport(
        check="invariant_cube",
        passed=worst <= slack,
        worst_value=worst,
        location={"time": float(traj.times[k])},
        params={"precondition_met": True, "cube": [lo, hi], "eta": eta, "slack": slack},
    )


def check_invariant_cube(
    potentials,
    signal,
    K: float,
    eta: float,
    x0,
    horizon: float,
    dt: float = 0.01,
    sample_every: float | None = None,
    slack: float = 1e-8,
) -> CheckReport:
    """Simulate from ``x0`` and verify the invariant-cube containment."""
    if isinstance(signal, WeightedDigraph):
        signal = fixed_signal(signal)
    if sample_every is None:
        sample_every = 10.0 * dt
    traj = integrate(potentials, signal, K, x0, dt, horizon, sample_every)
    return cube_containment(traj, potentials, eta, slack)
