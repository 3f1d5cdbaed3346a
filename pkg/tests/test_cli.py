import json
import subprocess
import sys

import numpy as np
import pytest

from signedsync import config as cfgmod
from signedsync.cli import main
from signedsync.graph import SignedGraph, benchmark_graph, graph_laplacian, spectral_report

SMALL_CONFIG = """\
[graph]
n_nodes = 3
edge = [{i = 1, j = 2, w = 0.8}, {i = 1, j = 3, w = -0.5}, {i = 2, j = 3, w = 0.6}]

[gains]
c1 = 13.0

[sim]
horizon = 1.0
output_stride = 10
seed = 3
"""


def write(path, text):
    path.write_text(text)
    return path


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


# -- eigen ------------------------------------------------------------------------------

def test_eigen_benchmark_unit_magnitudes(tmp_path, capsys):
    path = tmp_path / "bench.toml"
    cfgmod.write_graph(benchmark_graph(magnitudes=np.ones(20)), path)
    rep = run_json(capsys, ["eigen", str(path)])
    assert rep["bound_holds"] is True and rep["c1_prop2"] == 12.0
    assert rep["lambda_min"] >= -12.0
    assert set(rep) >= {"eigenvalues", "lambda_min", "lambda_max", "c1_prop1", "c1_prop2",
                        "bound_holds"}


def test_eigen_two_node_negative(tmp_path, capsys):
    path = tmp_path / "g.toml"
    cfgmod.write_graph(SignedGraph(2, ((1, 2, -1.0),), normalized=True), path)
    rep = run_json(capsys, ["eigen", str(path)])
    assert rep["lambda_min"] == pytest.approx(-2.0, abs=1e-12)
    assert rep["c1_prop1"] == pytest.approx(2.0, abs=1e-12)


def test_eigen_unsigned_path(tmp_path, capsys):
    path = tmp_path / "g.toml"
    cfgmod.write_graph(SignedGraph(4, ((1, 2, 1.0), (2, 3, 0.5), (3, 4, 0.7))), path)
    assert run_json(capsys, ["eigen", str(path)])["lambda_min"] == pytest.approx(0.0, abs=1e-12)


def test_eigen_invalid_graph(tmp_path, capsys):
    path = write(tmp_path / "g.toml", "n_nodes = 3\nedge = [{i = 1, j = 1, w = 1.0}]\n")
    assert main(["eigen", str(path)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_eigen_missing_file(tmp_path):
    assert main(["eigen", str(tmp_path / "absent.toml")]) == 3


# -- gen-graph ---------------------------------------------------------------------------------

def test_gen_graph_deterministic(tmp_path):
    a, b = tmp_path / "a.toml", tmp_path / "b.toml"
    for p in (a, b):
        assert main(["gen-graph", "--n", "10", "--density", "0.4", "--seed", "5",
                     "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    g = cfgmod.read_graph(a)
    assert g.n_nodes == 10 and g.is_connected()


def test_gen_graph_examples(tmp_path):
    p = tmp_path / "g.toml"
    assert main(["gen-graph", "--n", "2", "--density", "1", "--out", str(p)]) == 0
    assert cfgmod.read_graph(p).n_edges == 1
    assert main(["gen-graph", "--n", "6", "--negative-fraction", "0", "--out", str(p)]) == 0
    lam = spectral_report(graph_laplacian(cfgmod.read_graph(p))).lambda_min
    assert lam == pytest.approx(0.0, abs=1e-12)


def test_gen_graph_impossible(tmp_path):
    assert main(["gen-graph", "--n", "40", "--density", "0.001", "--out",
                 str(tmp_path / "g.toml")]) == 1
    assert not (tmp_path / "g.toml").exists()


# -- simulate ------------------------------------------------------------------------------------

def test_simulate_writes_outputs(tmp_path):
    cfg = write(tmp_path / "run.toml", SMALL_CONFIG)
    out = tmp_path / "out"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"config.resolved.toml", "trajectory.csv", "metrics.csv", "summary.json",
                     "manifest.json", "fig_estimation_errors.csv", "fig_estimated_weights.csv",
                     "fig_sync_errors.csv"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["sim"]["seed"] == 3
    assert all(str(out) in p for p in manifest["outputs"].values())
    assert len((out / "trajectory.csv").read_text().splitlines()) == 1 + 101


def test_simulate_replay_from_snapshot(tmp_path):
    cfg = write(tmp_path / "run.toml", SMALL_CONFIG)
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "a")]) == 0
    snap = tmp_path / "a" / "config.resolved.toml"
    assert main(["simulate", str(snap), "--out", str(tmp_path / "b")]) == 0
    for name in ("trajectory.csv", "metrics.csv", "fig_sync_errors.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("text", [
    "[graph\nn_nodes = 3\n",
    SMALL_CONFIG.replace("c1 = 13.0", "c1 = -1.0"),
    SMALL_CONFIG.replace("w = 0.8", "w = 0.0"),
    SMALL_CONFIG + "\n[bogus]\nx = 1\n",
    SMALL_CONFIG.replace("horizon = 1.0", "horizon = \"long\""),
])
def test_malformed_config_leaves_no_outputs(tmp_path, capsys, text):
    cfg = write(tmp_path / "bad.toml", text)
    out = tmp_path / "out"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 1
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    cfg = write(tmp_path / "bad.toml", "[graph]\nn_nodes = 3\nedge = [\n")
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "line" in capsys.readouterr().err


def test_low_gain_warns_but_runs(tmp_path, capsys):
    cfg = write(tmp_path / "run.toml", SMALL_CONFIG.replace("c1 = 13.0", "c1 = 2.0"))
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "warning" in capsys.readouterr().err
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["warnings"]


def test_divergence_exit_code(tmp_path):
    text = """\
[graph]
n_nodes = 2
edge = [{i = 1, j = 2, w = -1.0}]
[dynamics]
kind = "zero"
[gains]
c1 = 0.0
mode = "prop1"
[signal]
enabled = false
[sim]
dt = 0.01
horizon = 30.0
[init]
x0 = [0.5, -0.5]
"""
    cfg = write(tmp_path / "div.toml", text)
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_simulate_sweep(tmp_path):
    cfg = write(tmp_path / "run.toml", SMALL_CONFIG)
    out = tmp_path / "sweep"
    assert main(["simulate", str(cfg), "--out", str(out), "--sweep", "2", "--jobs", "2"]) == 0
    a, b = out / "seed_3" / "trajectory.csv", out / "seed_4" / "trajectory.csv"
    assert a.exists() and b.exists() and a.read_bytes() != b.read_bytes()
    assert main(["simulate", str(cfg), "--out", str(tmp_path / "single"), "--seed", "4"]) == 0
    assert (tmp_path / "single" / "trajectory.csv").read_bytes() == b.read_bytes()


# -- reproduce --------------------------------------------------------------------------------------

def test_reproduce_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["reproduce", "--out", str(tmp_path / name), "--horizon", "5"]) == 0
    capsys.readouterr()
    for name in ("trajectory.csv", "fig_estimation_errors.csv", "fig_estimated_weights.csv",
                 "fig_sync_errors.csv", "metrics.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header = (tmp_path / "a" / "fig_estimated_weights.csv").read_text().splitlines()[0]
    assert header.count("w_") == 20


def test_reproduce_seed_changes_magnitudes_not_signs(tmp_path, capsys):
    weights = []
    for seed in (0, 1):
        assert main(["reproduce", "--out", str(tmp_path / str(seed)), "--seed", str(seed),
                     "--horizon", "0.5"]) == 0
        manifest = json.loads((tmp_path / str(seed) / "manifest.json").read_text())
        g = cfgmod.graph_from_dict(manifest["config"]["graph"])
        weights.append(np.array([w for _, _, w in g.edges]))
    capsys.readouterr()
    assert not np.allclose(weights[0], weights[1])
    assert np.array_equal(np.sign(weights[0]), np.sign(weights[1]))


# -- check-pe -----------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def short_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("short")
    assert main(["reproduce", "--out", str(out), "--horizon", "4"]) == 0
    return out


def test_check_pe_state_and_edge(short_run, tmp_path, capsys):
    traj = str(short_run / "trajectory.csv")
    rep = run_json(capsys, ["check-pe", traj, "--delta", "0.0", "--window", "2"])
    assert rep["dimension"] == 12 and rep["qualified_count"] > 0
    assert set(rep) >= {"delta", "T", "stride", "mu_estimate", "qualified_count", "windows"}
    out = tmp_path / "edge.json"
    assert main(["check-pe", traj, "--gram", "edge", "--delta", "0.0", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["dimension"] == 66


def test_check_pe_radius_with_truth(short_run, tmp_path, capsys):
    graph = tmp_path / "g.toml"
    resolved = json.loads((short_run / "manifest.json").read_text())["config"]["graph"]
    cfgmod.write_graph(cfgmod.graph_from_dict(resolved), graph)
    plain = run_json(capsys, ["check-pe", str(short_run / "trajectory.csv")])
    full = run_json(capsys, ["check-pe", str(short_run / "trajectory.csv"), "--truth", str(graph)])
    assert full["radius"] > plain["radius"] > 0


def test_check_pe_window_too_long(short_run, capsys):
    assert main(["check-pe", str(short_run / "trajectory.csv"), "--window", "10"]) == 1
    assert "exceeds" in capsys.readouterr().err


def test_check_pe_missing_column(short_run, tmp_path, capsys):
    lines = (short_run / "trajectory.csv").read_text().splitlines()
    cols = lines[0].split(",")
    drop = cols.index("what_7")
    cut = [",".join(v for k, v in enumerate(line.split(",")) if k != drop) for line in lines]
    bad = write(tmp_path / "bad.csv", "\n".join(cut) + "\n")
    assert main(["check-pe", str(bad)]) == 1
    assert "what_7" in capsys.readouterr().err


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "signedsync", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("simulate", "reproduce", "check-pe", "eigen", "gen-graph"):
        assert cmd in res.stdout
