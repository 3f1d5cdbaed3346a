"""Command-line interface.

Exit codes: 0 success, 1 validation/format error, 2 numeric or divergence
error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .analysis import convergence_summary, lyapunov_series, recover_topology, write_figure_series, write_summary
from .errors import NumericError, ValidationError
from .excitation import EdgeExcitation, delta_pe_check
from .graph import (build_complete_incidence, check_rayleigh_bound, embed_weights,
                    graph_laplacian, random_signed_graph, spectral_report)
from .protocol import required_gain
from .sim import GainWarning, Trajectory, simulate

log = logging.getLogger("signedsync")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def run_resolved(resolved: dict, out_dir) -> dict:
    """Simulate a resolved config and write every artifact into ``out_dir``.

    Nothing is written unless the simulation completes.
    """
    out_dir = Path(out_dir)
    cfg = cfgmod.build_sim_config(resolved)
    started = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", GainWarning)
        traj = simulate(cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    plant = cfg.plant
    metrics = lyapunov_series(traj, plant.w_bar, cfg.gains.c1, plant.laplacian)
    analysis = resolved["analysis"]
    summary = convergence_summary(metrics, float(analysis["tail_fraction"]))
    recovered = recover_topology(traj.w_hat[-1], float(analysis["threshold"]), plant.graph)

    stride = int(resolved["sim"]["output_stride"])
    out_traj = traj.decimate(stride)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        "config": out_dir / "config.resolved.toml",
        "trajectory": out_dir / "trajectory.csv",
        "metrics_csv": out_dir / "metrics.csv",
        "summary": out_dir / "summary.json",
    }
    outputs["config"].write_text(cfgmod.dumps(resolved))
    out_traj.to_csv(outputs["trajectory"])
    out_metrics = lyapunov_series(out_traj, plant.w_bar, cfg.gains.c1, plant.laplacian)
    out_metrics.to_csv(outputs["metrics_csv"])
    figures = write_figure_series(out_metrics, out_traj, plant.graph, out_dir)
    lam = spectral_report(plant.laplacian).lambda_min
    write_summary(outputs["summary"], summary, recovered, metrics, extra={
        "lambda_min": lam, "c1": cfg.gains.c1, "gain_margin": cfg.gain_margin(),
        "seed": cfg.seed, "samples": len(traj.times)})
    manifest = {
        "tool": "signedsync", "version": __version__,
        "config": resolved,
        "outputs": {**{k: str(v) for k, v in outputs.items()}, **figures},
        "warnings": [str(w.message) for w in caught],
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    manifest_path = out_dir / "manifest.json"
    manifest["outputs"]["manifest"] = str(manifest_path)
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def _sweep_job(args):
    resolved, out_dir = args
    return run_resolved(resolved, out_dir)["outputs"]["manifest"]


def cmd_simulate(args) -> int:
    resolved, _ = cfgmod.load_config(args.config)
    if args.seed is not None:
        resolved = cfgmod.set_seed(resolved, args.seed)
    if not args.sweep:
        run_resolved(resolved, args.out)
        print(f"wrote {Path(args.out) / 'manifest.json'}")
        return EXIT_OK
    base = int(resolved["sim"]["seed"])
    jobs = [(cfgmod.set_seed(resolved, base + k), Path(args.out) / f"seed_{base + k}")
            for k in range(args.sweep)]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for path in pool.map(_sweep_job, jobs):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    resolved = cfgmod.reproduction_config(seed=args.seed, horizon=args.horizon)
    manifest = run_resolved(resolved, args.out)
    summary = json.loads(Path(manifest["outputs"]["summary"]).read_text())
    print(json.dumps({"convergence": summary["convergence"],
                      "precision": summary["topology"]["precision"],
                      "recall": summary["topology"]["recall"],
                      "sign_accuracy": summary["topology"]["sign_accuracy"]}, indent=2))
    return EXIT_OK


def cmd_check_pe(args) -> int:
    traj = Trajectory.from_csv(args.trajectory)
    e_bar = build_complete_incidence(traj.n)
    signal = EdgeExcitation(traj.z_hat, e_bar, space=args.gram)
    x1 = traj.x_tilde
    radius = float(np.max(np.linalg.norm(x1, axis=1)))
    if args.truth:
        w_tilde = embed_weights(cfgmod.read_graph(args.truth)) - traj.w_hat
        radius = float(np.max(np.sqrt(np.sum(x1 ** 2, axis=1) + np.sum(w_tilde ** 2, axis=1))))
    report = delta_pe_check(traj.times, signal, x1, args.delta, args.window, args.stride,
                            radius=radius)
    doc = report.to_dict()
    doc["gram"] = args.gram
    doc["dimension"] = traj.n if args.gram == "state" else traj.m_bar
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def eigen_report(g) -> dict:
    rep = spectral_report(graph_laplacian(g))
    if g.is_normalized():
        _, holds = check_rayleigh_bound(g)
    else:
        holds = rep.lambda_min >= -g.n_nodes - 1e-9
    return {"eigenvalues": [float(v) for v in rep.eigenvalues],
            "lambda_min": rep.lambda_min, "lambda_max": rep.lambda_max,
            "kernel_residual": rep.kernel_residual,
            "c1_prop1": required_gain("prop1", lambda_min=rep.lambda_min),
            "c1_prop2": required_gain("prop2", n=g.n_nodes),
            "normalized": g.is_normalized(),
            "bound_holds": bool(holds)}


def cmd_eigen(args) -> int:
    g = cfgmod.read_graph(args.graph)
    print(json.dumps(eigen_report(g), indent=2))
    return EXIT_OK


def cmd_gen_graph(args) -> int:
    g = random_signed_graph(args.n, args.density, args.negative_fraction, args.seed,
                            normalized=args.normalized)
    cfgmod.write_graph(g, args.out)
    print(f"wrote {args.out} ({g.n_edges} edges)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="signedsync",
        description="Synchronise and identify networks coupled through a signed Laplacian.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a simulation from a TOML config")
    s.add_argument("config", help="path to the TOML config")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, help="override [sim] seed")
    s.add_argument("--sweep", type=int, default=0, metavar="K",
                   help="run K consecutive seeds into OUT/seed_<s>/")
    s.add_argument("--jobs", type=int, default=None, help="worker processes for --sweep")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reproduce", help="run the built-in 12-agent benchmark")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=0,
                   help="seed for weight magnitudes and initial states (default 0)")
    s.add_argument("--horizon", type=float, default=200.0, help="seconds (default 200)")
    s.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("check-pe", help="windowed excitation report for a trajectory CSV")
    s.add_argument("trajectory", help="trajectory CSV written by simulate")
    s.add_argument("--delta", type=float, default=0.1, help="qualification level on |x_tilde|")
    s.add_argument("--window", type=float, default=2.0, help="window length T in seconds")
    s.add_argument("--stride", type=float, default=0.1, help="window advance in seconds")
    s.add_argument("--gram", choices=("state", "edge"), default="state",
                   help="N x N Gram of B B^T or M x M Gram of B^T B")
    s.add_argument("--truth", help="true graph file, to report the radius of |(x_tilde, w_tilde)|")
    s.add_argument("--out", help="write the JSON report here instead of stdout")
    s.set_defaults(func=cmd_check_pe)

    s = sub.add_parser("eigen", help="spectrum and gain requirements of a graph file")
    s.add_argument("graph", help="graph TOML file")
    s.set_defaults(func=cmd_eigen)

    s = sub.add_parser("gen-graph", help="write a connected random signed graph")
    s.add_argument("--n", type=int, required=True, help="number of nodes")
    s.add_argument("--density", type=float, default=0.4, help="edge probability in (0, 1]")
    s.add_argument("--negative-fraction", type=float, default=0.5,
                   help="probability an edge is antagonistic")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--normalized", action=argparse.BooleanOptionalAction, default=True,
                   help="magnitudes uniform in [0.3, 1] (default on)")
    s.add_argument("--out", required=True, help="graph file to write")
    s.set_defaults(func=cmd_gen_graph)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
