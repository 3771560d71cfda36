import json
import math

import numpy as np
import pytest

from syncflow import InputError
from syncflow.cli import load_scenario, main, run, verify

BASE = {
    "version": 1,
    "name": "base",
    "nodes": [
        {"kind": "quadratic", "center": [0.0], "weight": 1.0},
        {"kind": "quadratic", "center": [0.0], "weight": 2.0},
    ],
    "weight_bounds": [0.5, 2.0],
    "graphs": {"g0": [[0, 1, 1.0], [1, 0, 1.0]]},
    "signal": {"type": "fixed", "graph": "g0"},
    "K": 1.0,
    "x0": [3.0, -2.0],
    "dt": 0.02,
    "t_end": 12.0,
    "sample_every": 0.3,
    "checks": [{"name": "sync", "tol": 1e-4}],
}


def write(tmp_path, obj, name="scen.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_load_minimal_two_node(tmp_path):
    sc = load_scenario(write(tmp_path, BASE))
    assert sc.node_count == 2
    assert sc.dim == 1
    assert sc.signal.graph_at(0.0).node_count == 2


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "version": 1,\n  "nodes": [\n')
    with pytest.raises(InputError, match="line"):
        load_scenario(p)


def test_weight_below_bound_rejected(tmp_path):
    bad = dict(BASE, graphs={"g0": [[0, 1, 0.0], [1, 0, 1.0]]})
    with pytest.raises(InputError, match="below a_lo"):
        load_scenario(write(tmp_path, bad))


def test_segment_below_dwell_floor_rejected(tmp_path):
    bad = dict(
        BASE,
        graphs={"ga": [[0, 1, 1.0]], "gb": [[1, 0, 1.0]]},
        signal={"type": "periodic", "segments": [["ga", 0.2], ["gb", 1.0]], "dwell_floor": 0.5},
    )
    with pytest.raises(InputError, match="dwell"):
        load_scenario(write(tmp_path, bad))


def test_unknown_graph_id_rejected(tmp_path):
    bad = dict(BASE, signal={"type": "fixed", "graph": "nope"})
    with pytest.raises(InputError, match="unknown graph id"):
        load_scenario(write(tmp_path, bad))


def test_unknown_check_rejected(tmp_path):
    bad = dict(BASE, checks=[{"name": "frobnicate"}])
    with pytest.raises(InputError, match="unknown check"):
        load_scenario(write(tmp_path, bad))


def test_monotone_V_requires_common_zero(tmp_path):
    bad = dict(
        BASE,
        nodes=[
            {"kind": "quadratic", "center": [0.0]},
            {"kind": "quadratic", "center": [1.0]},
        ],
        checks=[{"name": "monotone_V"}],
    )
    with pytest.raises(InputError, match="intersection"):
        load_scenario(write(tmp_path, bad))


def test_K_and_K_list_mutually_exclusive(tmp_path):
    bad = dict(BASE)
    bad["K_list"] = [1.0, 2.0]
    with pytest.raises(InputError, match="exactly one"):
        load_scenario(write(tmp_path, bad))


def test_x0_generators(tmp_path):
    grid = dict(BASE, x0="grid", x0_range=[-1.0, 1.0])
    sc = load_scenario(write(tmp_path, grid))
    np.testing.assert_allclose(sc.x0, [-1.0, 1.0])
    rand = dict(BASE, x0="random:9")
    sc1 = load_scenario(write(tmp_path, rand, "a.json"))
    sc2 = load_scenario(write(tmp_path, rand, "b.json"))
    np.testing.assert_array_equal(sc1.x0, sc2.x0)
    assert np.all(np.abs(sc1.x0) <= 5.0)


def test_defaults_from_dwell_floor(tmp_path):
    obj = {k: v for k, v in BASE.items() if k not in ("dt", "sample_every")}
    obj["signal"] = {"type": "fixed", "graph": "g0", "dwell_floor": 2.0}
    sc = load_scenario(write(tmp_path, obj))
    assert sc.dt == pytest.approx(0.2)
    assert sc.sample_every == pytest.approx(2.0)


def test_run_writes_artifacts_and_passes(tmp_path):
    sc = load_scenario(write(tmp_path, BASE))
    out = tmp_path / "out"
    assert run(sc, out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] is True
    assert report["checks"][0]["check"] == "sync"
    assert (out / "plot.gp").exists()
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x_0_0,x_1_0,diameter,V,theta"


def test_csv_row_count_invariant(tmp_path):
    obj = dict(
        BASE,
        graphs={"ga": [[0, 1, 1.0]], "gb": [[1, 0, 1.0]]},
        signal={"type": "periodic", "segments": [["ga", 0.7], ["gb", 0.7]], "dwell_floor": 0.7},
        dt=0.1,
        t_end=3.0,
        sample_every=1.0,
        checks=[],
    )
    sc = load_scenario(write(tmp_path, obj))
    out = tmp_path / "out"
    run(sc, out)
    rows = (out / "trajectory.csv").read_text().splitlines()
    n_grid = math.floor(3.0 / 1.0) + 1
    switches_off_grid = [0.7, 1.4, 2.1, 2.8]
    assert len(rows) - 1 == n_grid + len(switches_off_grid)


def test_csv_deterministic(tmp_path):
    obj = dict(BASE, x0="random:5")
    sc1 = load_scenario(write(tmp_path, obj, "s1.json"))
    sc2 = load_scenario(write(tmp_path, obj, "s2.json"))
    run(sc1, tmp_path / "o1")
    run(sc2, tmp_path / "o2")
    assert (tmp_path / "o1" / "trajectory.csv").read_bytes() == (
        tmp_path / "o2" / "trajectory.csv"
    ).read_bytes()


def test_csv_roundtrip_lossless(tmp_path):
    sc = load_scenario(write(tmp_path, BASE))
    out = tmp_path / "out"
    run(sc, out)
    lines = (out / "trajectory.csv").read_text().splitlines()
    header = lines[0].split(",")
    first = dict(zip(header, (float(v) for v in lines[1].split(","))))
    assert first["t"] == 0.0
    assert first["x_0_0"] == 3.0 and first["x_1_0"] == -2.0


def test_v_column_omitted_without_common_zero(tmp_path):
    obj = dict(
        BASE,
        nodes=[{"kind": "quadratic", "center": [0.0]}, {"kind": "quadratic", "center": [1.0]}],
        checks=[],
    )
    sc = load_scenario(write(tmp_path, obj))
    out = tmp_path / "out"
    run(sc, out)
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x_0_0,x_1_0,diameter,theta"


def test_exit_code_check_failure(tmp_path):
    obj = dict(
        BASE,
        nodes=[{"kind": "quartic", "center": [-1.0]}, {"kind": "quartic", "center": [1.0]}],
        checks=[{"name": "sync", "tol": 1e-6}],
        x0=[2.0, -2.0],
        dt=0.01,
    )
    sc = load_scenario(write(tmp_path, obj))
    assert verify(sc) == 1
    assert run(sc, tmp_path / "out") == 1


def test_exit_code_finite_escape(tmp_path, capsys):
    obj = dict(
        BASE,
        nodes=[{"kind": "quartic", "center": [0.0]}, {"kind": "quartic", "center": [0.0]}],
        x0=[60.0, -60.0],
        dt=0.05,
        checks=[],
    )
    sc = load_scenario(write(tmp_path, obj))
    out = tmp_path / "out"
    assert run(sc, out) == 3
    report = json.loads((out / "report.json").read_text())
    assert report["error"]["type"] == "finite-escape suspected"


def test_main_exit_codes(tmp_path, capsys):
    good = write(tmp_path, BASE, "good.json")
    assert main(["verify", str(good)]) == 0
    assert main(["verify", str(tmp_path / "missing.json")]) == 2
    bad = write(tmp_path, dict(BASE, graphs={"g0": [[0, 1, 9.0]]}), "bad.json")
    assert main(["verify", str(bad)]) == 2


def test_sweep_command_writes_csv(tmp_path):
    obj = dict(BASE)
    del obj["K"]
    obj["K_list"] = [0.5, 1.0, 5.0, 10.0]
    obj["epsilon"] = 0.05
    obj["nodes"] = [
        {"kind": "quadratic", "center": [0.0]},
        {"kind": "quadratic", "center": [1.0]},
    ]
    obj["checks"] = []
    obj["t_end"] = 20.0
    p = write(tmp_path, obj)
    assert main(["sweep", str(p), "--out", str(tmp_path / "sw")]) == 0
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "K,epsilon_estimate"
    got = [tuple(map(float, ln.split(","))) for ln in lines[1:]]
    for k, eps in got:
        assert eps == pytest.approx(1.0 / (1.0 + 2.0 * k), abs=1e-4)


def test_simulate_with_k_list_writes_sweep_too(tmp_path):
    obj = dict(BASE)
    del obj["K"]
    obj["K_list"] = [1.0, 2.0]
    obj["epsilon"] = 0.5
    obj["nodes"] = [
        {"kind": "quadratic", "center": [0.0]},
        {"kind": "quadratic", "center": [1.0]},
    ]
    obj["checks"] = []
    p = write(tmp_path, obj)
    sc = load_scenario(p)
    out = tmp_path / "out"
    assert run(sc, out) == 0
    assert (out / "sweep.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["checks"][-1]["check"] == "sweep_K"


def test_ujsc_check_through_cli(tmp_path):
    obj = dict(
        BASE,
        nodes=[
            {"kind": "quadratic", "center": [1.0], "weight": 0.5},
            {"kind": "quadratic", "center": [1.0]},
            {"kind": "quadratic", "center": [1.0], "weight": 2.0},
        ],
        graphs={"ga": [[0, 1, 1.0], [1, 2, 1.0]], "gb": [[2, 1, 1.0], [1, 0, 1.0]]},
        signal={"type": "periodic", "segments": [["ga", 0.5], ["gb", 0.5]], "dwell_floor": 0.5},
        x0=[4.0, -3.0, 0.5],
        dt=0.1,
        t_end=40.0,
        sample_every=0.5,
        checks=[
            {"name": "ujsc", "T": 1.0},
            {"name": "sync", "tol": 1e-5},
            {"name": "monotone_V"},
            {"name": "monotone_theta"},
            {"name": "common_limit", "tol": 1e-5},
            {"name": "node_optimum", "tol": 1e-4},
            {"name": "invariant_cube", "eta": 4.5},
            {"name": "drift_alignment"},
            {"name": "feasibility"},
        ],
    )
    sc = load_scenario(write(tmp_path, obj))
    assert verify(sc) == 0
