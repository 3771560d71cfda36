"""Scenario-driven command-line front end.

Commands
--------
``syncflow simulate <scenario.json> [--out DIR]``
    Run the scenario, write ``trajectory.csv``, ``report.json``, ``plot.gp``
    (and ``sweep.csv`` when the scenario carries a K_list).
``syncflow verify <scenario.json>``
    Run the checks only and print one line per check; no files.
``syncflow sweep <scenario.json> --k 1,2,4,8 [--out DIR]``
    Coupling-gain sweep; writes ``sweep.csv``.

Exit codes: 0 all checks pass, 1 check failure, 2 input error, 3 numerical
error.  SYNCFLOW_THREADS caps sweep parallelism.  Identical scenarios (and
seeds) produce byte-identical CSV output: floats are written with 17
significant digits so round-trips are lossless.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .convex_geometry import check_drift_alignment
from .errors import (
    InputError,
    NumericalError,
    PreconditionError,
    SyncflowError,
)
from .graphs import (
    FixedSchedule,
    PeriodicSchedule,
    SwitchingSignal,
    WeightedDigraph,
    certify_ujsc,
    is_strongly_connected,
)
from .potentials import common_zero_set, potential_from_dict
from .report import CheckReport
from .simulator import integrate

SCHEMA_VERSION = 1

CHECK_NAMES = {
    "sync",
    "no_sync",
    "monotone_V",
    "monotone_theta",
    "common_limit",
    "node_optimum",
    "invariant_cube",
    "drift_alignment",
    "feasibility",
    "spectral_bound",
    "ujsc",
}


@dataclass
class Scenario:
    """Fully validated run description loaded from a JSON scenario file."""

    name: str
    potentials: list
    graphs: dict
    signal: SwitchingSignal
    weight_bounds: tuple
    x0: np.ndarray
    dt: float
    t_end: float
    sample_every: float
    K: float | None = None
    K_list: list | None = None
    checks: list = field(default_factory=list)
    epsilon: float = 0.05
    tail_fraction: float = analysis.DEFAULT_TAIL_FRACTION
    divergence_guard: float = 1e8

    @property
    def node_count(self) -> int:
        return len(self.potentials)

    @property
    def dim(self) -> int:
        return self.potentials[0].dimension

    @property
    def primary_K(self) -> float:
        # a sweep scenario's primary trajectory uses its largest gain
        return self.K if self.K is not None else self.K_list[-1]


def _fail(msg: str):
    raise InputError(msg)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        _fail(f"{where}: missing required field {key!r}")
    return obj[key]


def _positive(value, key: str) -> float:
    v = float(value)
    if not (v > 0 and math.isfinite(v)):
        _fail(f"field {key!r} must be a positive finite number, got {value}")
    return v


def load_scenario(path) -> Scenario:
    """Load and validate a scenario file; every invariant is checked here."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise InputError(f"cannot read scenario file {p}: {e}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(
            f"parse error in {p} at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    if not isinstance(raw, dict):
        _fail("scenario file must contain a JSON object")
    if raw.get("version") != SCHEMA_VERSION:
        _fail(f"unsupported scenario version {raw.get('version')!r}; expected {SCHEMA_VERSION}")

    nodes_raw = _require(raw, "nodes", "scenario")
    if not isinstance(nodes_raw, list) or not nodes_raw:
        _fail("field 'nodes' must be a nonempty list of potential objects")
    potentials = [potential_from_dict(d) for d in nodes_raw]
    dims = {pot.dimension for pot in potentials}
    if len(dims) != 1:
        _fail(f"all node potentials must share one dimension, got {sorted(dims)}")
    n = len(potentials)
    m = dims.pop()

    wb = raw.get("weight_bounds", [1e-6, 1e6])
    if not (isinstance(wb, list) and len(wb) == 2):
        _fail("field 'weight_bounds' must be [a_lo, a_hi]")
    a_lo, a_hi = float(wb[0]), float(wb[1])
    if not (0 < a_lo <= a_hi):
        _fail(f"weight bounds require 0 < a_lo <= a_hi, got [{a_lo}, {a_hi}]")

    graphs_raw = _require(raw, "graphs", "scenario")
    if not isinstance(graphs_raw, dict) or not graphs_raw:
        _fail("field 'graphs' must map graph ids to edge-triple lists")
    graphs = {}
    for gid, edges in graphs_raw.items():
        arcs = []
        for e in edges:
            if not (isinstance(e, list) and len(e) == 3):
                _fail(f"graph {gid!r}: edge must be [source, target, weight], got {e!r}")
            j, i, w = e
            w = float(w)
            if not (a_lo - 1e-15 <= w <= a_hi + 1e-15):
                _fail(
                    f"graph {gid!r}: weight {w} of arc ({j}, {i}) is outside "
                    f"the declared bounds [{a_lo}, {a_hi}]"
                    + (" (weight below a_lo)" if w < a_lo else "")
                )
            arcs.append((int(j), int(i), w))
        graphs[str(gid)] = WeightedDigraph(node_count=n, arcs=tuple(arcs))

    sig_raw = _require(raw, "signal", "scenario")
    stype = _require(sig_raw, "type", "signal")
    if stype == "fixed":
        gid = str(_require(sig_raw, "graph", "fixed signal"))
        if gid not in graphs:
            _fail(f"signal references unknown graph id {gid!r}")
        dwell = _positive(sig_raw.get("dwell_floor", 1.0), "dwell_floor")
        signal = SwitchingSignal(graphs, FixedSchedule(gid), dwell)
    elif stype == "periodic":
        segs_raw = _require(sig_raw, "segments", "periodic signal")
        if not isinstance(segs_raw, list) or not segs_raw:
            _fail("periodic signal needs a nonempty 'segments' list of [graph_id, duration]")
        segs = []
        for s in segs_raw:
            if not (isinstance(s, list) and len(s) == 2):
                _fail(f"segment must be [graph_id, duration], got {s!r}")
            gid = str(s[0])
            if gid not in graphs:
                _fail(f"segment references unknown graph id {gid!r}")
            segs.append((gid, _positive(s[1], "segment duration")))
        dwell = _positive(_require(sig_raw, "dwell_floor", "periodic signal"), "dwell_floor")
        if any(d < dwell - 1e-12 for _, d in segs):
            _fail("every segment duration must be >= the dwell floor")
        signal = SwitchingSignal(graphs, PeriodicSchedule(tuple(segs)), dwell)
    else:
        _fail(f"signal type must be 'fixed' or 'periodic', got {stype!r}")

    has_k = "K" in raw
    has_list = "K_list" in raw
    if has_k == has_list:
        _fail("scenario must set exactly one of 'K' or 'K_list'")
    K = K_list = None
    if has_k:
        K = float(raw["K"])
        if K < 0:
            _fail(f"K must be nonnegative, got {K}")
    else:
        K_list = [float(k) for k in raw["K_list"]]
        if not K_list or any(k <= 0 for k in K_list) or any(
            b <= a for a, b in zip(K_list, K_list[1:])
        ):
            _fail("K_list must be a positive, strictly increasing list")

    dt = _positive(raw["dt"], "dt") if "dt" in raw else signal.dwell_floor / 10.0
    t_end = _positive(_require(raw, "t_end", "scenario"), "t_end")
    sample_every = (
        _positive(raw["sample_every"], "sample_every") if "sample_every" in raw else 10.0 * dt
    )
    if signal.has_switches() and dt > signal.dwell_floor / 4.0 + 1e-12:
        _fail(f"dt={dt} violates dt <= dwell_floor/4 = {signal.dwell_floor / 4.0}")

    x0 = _parse_x0(raw, n * m)

    checks = []
    for c in raw.get("checks", []):
        if not isinstance(c, dict) or "name" not in c:
            _fail(f"each check must be an object with a 'name', got {c!r}")
        name = c["name"]
        if name not in CHECK_NAMES:
            _fail(f"unknown check {name!r}; expected one of {sorted(CHECK_NAMES)}")
        checks.append(dict(c))

    scenario = Scenario(
        name=str(raw.get("name", p.stem)),
        potentials=potentials,
        graphs=graphs,
        signal=signal,
        weight_bounds=(a_lo, a_hi),
        x0=x0,
        dt=dt,
        t_end=t_end,
        sample_every=sample_every,
        K=K,
        K_list=K_list,
        checks=checks,
        epsilon=float(raw.get("epsilon", 0.05)),
        tail_fraction=float(raw.get("tail_fraction", analysis.DEFAULT_TAIL_FRACTION)),
        divergence_guard=float(raw.get("divergence_guard", 1e8)),
    )
    _validate_checks(scenario)
    return scenario


def _parse_x0(raw: dict, length: int) -> np.ndarray:
    spec = _require(raw, "x0", "scenario")
    lo, hi = raw.get("x0_range", [-5.0, 5.0])
    if isinstance(spec, list):
        x0 = np.asarray(spec, dtype=float)
        if x0.shape != (length,):
            _fail(f"explicit x0 must hold {length} numbers, got {x0.shape[0]}")
        return x0
    if spec == "grid":
        return np.linspace(float(lo), float(hi), length)
    if isinstance(spec, str) and spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            _fail(f"x0 generator {spec!r} needs an integer seed, e.g. 'random:42'")
        rng = np.random.default_rng(seed)
        return rng.uniform(float(lo), float(hi), size=length)
    _fail(f"x0 must be a list of numbers, 'grid', or 'random:<seed>', got {spec!r}")


def _validate_checks(sc: Scenario):
    names = {c["name"] for c in sc.checks}
    fixed = isinstance(sc.signal.schedule, FixedSchedule)
    if "spectral_bound" in names:
        if not fixed:
            _fail("check 'spectral_bound' requires a fixed signal")
        g = sc.signal.graph_at(0.0)
        if not g.is_symmetric():
            _fail("check 'spectral_bound' requires a symmetric graph")
        if not is_strongly_connected(g):
            _fail("check 'spectral_bound' requires a connected graph")
        if sc.primary_K <= 0:
            _fail("check 'spectral_bound' requires K > 0")
    if "invariant_cube" in names and sc.dim != 1:
        _fail("check 'invariant_cube' requires one-dimensional node states")
    if ("monotone_V" in names or "common_limit" in names) and common_zero_set(sc.potentials) is None:
        _fail(
            "checks 'monotone_V'/'common_limit' need a nonempty intersection of zero sets"
        )
    for c in sc.checks:
        if c["name"] == "ujsc" and "T" not in c:
            _fail("check 'ujsc' needs a window length 'T'")


# -- execution ----------------------------------------------------------------


def _run_checks(sc: Scenario, traj, diag) -> list[CheckReport]:
    reports = []
    for c in sc.checks:
        name = c["name"]
        tf = float(c.get("tail_fraction", sc.tail_fraction))
        if name == "sync":
            v = analysis.sync_verdict(traj, tol=float(c.get("tol", 1e-6)), tail_fraction=tf)
            reports.append(
                CheckReport(
                    check="sync",
                    passed=v.exact_sync,
                    worst_value=v.epsilon_estimate,
                    location=None,
                    params={
                        "tol": float(c.get("tol", 1e-6)),
                        "limit_point": None if v.limit_point is None else v.limit_point.tolist(),
                    },
                )
            )
        elif name == "no_sync":
            floor = float(c.get("floor", 1e-3))
            tail = analysis._tail_indices(traj.times, tf)
            observed = float(diag.diameter[tail].min())
            reports.append(
                CheckReport(
                    check="no_sync",
                    passed=observed >= floor,
                    worst_value=observed,
                    location=None,
                    params={"floor": floor, "observed_floor": observed},
                )
            )
        elif name == "monotone_V":
            rep = analysis.check_monotone(diag.v, rise_tol=c.get("rise_tol"), label="V")
            reports.append(rep)
        elif name == "monotone_theta":
            rep = analysis.check_monotone(diag.theta, rise_tol=c.get("rise_tol"), label="theta")
            reports.append(rep)
        elif name == "common_limit":
            reports.append(
                analysis.check_common_limit(diag, tail_fraction=tf, tol=float(c.get("tol", 1e-6)))
            )
        elif name == "node_optimum":
            reports.append(
                analysis.check_node_optimum(
                    diag, sc.potentials, tail_fraction=tf, tol=float(c.get("tol", 1e-6))
                )
            )
        elif name == "invariant_cube":
            reports.append(
                analysis.cube_containment(
                    traj, sc.potentials, eta=float(c.get("eta", 0.5)),
                    slack=float(c.get("slack", 1e-8)),
                )
            )
        elif name == "drift_alignment":
            samples = traj.blocks().reshape(-1, sc.dim)
            if samples.shape[0] > 512:
                stride = samples.shape[0] // 512 + 1
                samples = samples[::stride]
            reports.append(check_drift_alignment(sc.potentials, samples, tol=float(c.get("tol", 1e-10))))
        elif name == "feasibility":
            reports.append(analysis.check_feasibility(sc.potentials))
        elif name == "spectral_bound":
            g = sc.signal.graph_at(0.0)
            p = analysis.minimize_aggregate(
                sc.potentials, g, sc.primary_K, sc.x0, tol=float(c.get("grad_tol", 1e-10))
            )
            reports.append(
                analysis.check_spectral_bound(
                    p, sc.potentials, g, sc.primary_K, tol=float(c.get("tol", 1e-8))
                )
            )
        elif name == "ujsc":
            T = float(c["T"])
            cert = certify_ujsc(sc.signal, T, horizon=sc.signal.period + T)
            reports.append(
                CheckReport(
                    check="ujsc",
                    passed=cert.ok,
                    worst_value=None,
                    location=None if cert.window is None else list(cert.window),
                    params={"T": T, "detail": cert.detail},
                )
            )
    return reports


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_trajectory_csv(path: Path, sc: Scenario, traj, diag):
    cols = ["t"]
    for i in range(sc.node_count):
        for k in range(sc.dim):
            cols.append(f"x_{i}_{k}")
    cols.append("diameter")
    if diag.v is not None:
        cols.append("V")
    cols.append("theta")
    lines = [",".join(cols)]
    for idx in range(len(traj)):
        row = [_fmt(traj.times[idx])]
        row += [_fmt(v) for v in traj.states[idx]]
        row.append(_fmt(diag.diameter[idx]))
        if diag.v is not None:
            row.append(_fmt(diag.v[idx]))
        row.append(_fmt(diag.theta[idx]))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _write_plot_script(path: Path, sc: Scenario, csv_name: str = "trajectory.csv"):
    ncols = 1 + sc.node_count * sc.dim
    path.write_text(
        "# gnuplot script: node trajectories and disagreement diameter\n"
        'set datafile separator ","\n'
        "set key outside\n"
        'set xlabel "t"\n'
        f'plot for [col=2:{ncols}] "{csv_name}" using 1:col with lines title columnheader(col), \\\n'
        f'     "{csv_name}" using 1:{ncols + 1} with lines lw 2 title "diameter"\n'
    )


def _write_sweep_csv(path: Path, sweep: analysis.SweepResult):
    lines = ["K,epsilon_estimate"]
    for k, eps, err in sweep.rows:
        lines.append(f"{_fmt(k)},{_fmt(eps) if err is None else 'nan'}")
    path.write_text("\n".join(lines) + "\n")


def _execute(sc: Scenario):
    """Simulate the primary trajectory, run checks, optionally sweep."""
    traj = integrate(
        sc.potentials,
        sc.signal,
        sc.primary_K,
        sc.x0,
        sc.dt,
        sc.t_end,
        sc.sample_every,
        divergence_guard=sc.divergence_guard,
        scenario_id=sc.name,
    )
    z_star = "auto" if common_zero_set(sc.potentials) is not None else None
    diag = analysis.diagnostics(traj, sc.potentials, z_star=z_star)
    reports = _run_checks(sc, traj, diag)
    sweep = None
    if sc.K_list is not None:
        sweep = analysis.sweep_K(
            sc.potentials,
            sc.signal,
            sc.x0,
            sc.K_list,
            epsilon=sc.epsilon,
            dt=sc.dt,
            t_end=sc.t_end,
            sample_every=sc.sample_every,
            tail_fraction=sc.tail_fraction,
        )
        reports.append(
            CheckReport(
                check="sweep_K",
                passed=sweep.passed,
                worst_value=None,
                location=None,
                params=sweep.as_dict(),
            )
        )
    return traj, diag, reports, sweep


def _report_json(sc: Scenario, reports, error=None) -> str:
    payload = {
        "scenario": sc.name,
        "pass": bool(reports) and all(r.passed for r in reports) if error is None else False,
        "error": error,
        "checks": [r.as_dict() for r in reports],
    }
    if not reports and error is None:
        payload["pass"] = True
    return json.dumps(payload, indent=2)


def run(scenario: Scenario, out_dir) -> int:
    """Simulate, check, and write artifacts; returns the process exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        traj, diag, reports, sweep = _execute(scenario)
    except NumericalError as e:
        (out / "report.json").write_text(
            _report_json(
                scenario,
                [],
                error={"type": "finite-escape suspected", "message": str(e)},
            )
        )
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    _write_trajectory_csv(out / "trajectory.csv", scenario, traj, diag)
    _write_plot_script(out / "plot.gp", scenario)
    if sweep is not None:
        _write_sweep_csv(out / "sweep.csv", sweep)
    (out / "report.json").write_text(_report_json(scenario, reports))
    for r in reports:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.check}")
    return 0 if all(r.passed for r in reports) else 1


def verify(scenario: Scenario) -> int:
    """Run checks only (no files); prints one line per check."""
    try:
        _, _, reports, _ = _execute(scenario)
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    for r in reports:
        worst = "" if r.worst_value is None else f" (worst={r.worst_value:.3e})"
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.check}{worst}")
    return 0 if all(r.passed for r in reports) else 1


def sweep_command(scenario: Scenario, k_arg: str | None, out_dir) -> int:
    if k_arg:
        try:
            k_list = [float(s) for s in k_arg.split(",") if s.strip()]
        except ValueError:
            raise InputError(f"--k expects comma-separated numbers, got {k_arg!r}") from None
    elif scenario.K_list is not None:
        k_list = scenario.K_list
    else:
        raise InputError("sweep needs --k or a scenario K_list")
    try:
        sweep = analysis.sweep_K(
            scenario.potentials,
            scenario.signal,
            scenario.x0,
            k_list,
            epsilon=scenario.epsilon,
            dt=scenario.dt,
            t_end=scenario.t_end,
            sample_every=scenario.sample_every,
            tail_fraction=scenario.tail_fraction,
        )
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_sweep_csv(out / "sweep.csv", sweep)
    for k, eps, err in sweep.rows:
        print(f"K={k:g}: " + (f"epsilon_estimate={eps:.6g}" if err is None else f"error: {err}"))
    print(f"[{'PASS' if sweep.passed else 'FAIL'}] sweep (epsilon={scenario.epsilon:g})")
    return 0 if sweep.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="syncflow",
        description="Simulate and verify synchronization of diffusively coupled convex-gradient networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="run a scenario and write CSV/JSON artifacts")
    p_sim.add_argument("scenario")
    p_sim.add_argument("--out", default="out", help="output directory (default: ./out)")
    p_ver = sub.add_parser("verify", help="run the scenario checks only (exit-code contract)")
    p_ver.add_argument("scenario")
    p_swp = sub.add_parser("sweep", help="sweep the coupling gain")
    p_swp.add_argument("scenario")
    p_swp.add_argument("--k", default=None, help="comma-separated gains, e.g. 1,2,4,8")
    p_swp.add_argument("--out", default="out", help="output directory (default: ./out)")
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.scenario)
        if args.command == "simulate":
            return run(scenario, args.out)
        if args.command == "verify":
            return verify(scenario)
        return sweep_command(scenario, args.k, args.out)
    except (InputError, PreconditionError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    except SyncflowError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
