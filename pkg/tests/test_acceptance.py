"""Acceptance criteria A1-A9.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts at the stated tolerance. Criteria that the implementation
cannot meet are left failing.
"""
import itertools
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE, benchmark_run
from signedsync.analysis import convergence_summary, lyapunov_series, recover_topology
from signedsync.dynamics import NodeDynamics, PlantSpec, cross_validate
from signedsync.excitation import EdgeExcitation, delta_pe_check, lemma1_frozen_check, windowed_gram
from signedsync.graph import (SignedGraph, build_complete_incidence, check_rayleigh_bound,
                              complete_graph, embed_weights, laplacian_direct,
                              laplacian_from_weights, random_signed_graph)
from signedsync.integrate import integrate
from signedsync.protocol import GainConfig, SignalConfig, phi_theta
from signedsync.sim import GainWarning, SimConfig, simulate

A6_SEEDS = (0, 1, 2, 3, 4)


def record(key, passed, line):
    ACCEPTANCE[key] = (bool(passed), line)
    print(f"{'PASS' if passed else 'FAIL'} {key}: {line}")
    assert passed, line


def a1_graphs():
    rng = np.random.default_rng(1)
    graphs = []
    for k in range(100):
        n = int(rng.integers(2, 9))
        pairs = [p for p in itertools.combinations(range(1, n + 1), 2) if rng.uniform() < 0.6]
        edges = tuple((i, j, float(rng.uniform(0.1, 3.0) * rng.choice([-1.0, 1.0])))
                      for i, j in pairs)
        graphs.append(SignedGraph(n, edges))
    return graphs


def test_a1_laplacian_oracle():
    graphs = a1_graphs()
    started = time.perf_counter()
    worst = 0.0
    for g in graphs:
        lap = laplacian_from_weights(build_complete_incidence(g.n_nodes), embed_weights(g))
        worst = max(worst, float(np.max(np.abs(lap - laplacian_direct(g)))))
    elapsed = time.perf_counter() - started
    record("A1", worst <= 1e-12 and elapsed < 1.0,
           f"100 graphs, max |edge-form - direct| = {worst:.1e} (tol 1e-12), {elapsed:.2f} s (< 1 s)")


def test_a2_structural_invariants():
    rng = np.random.default_rng(2)
    sym = flip = True
    row = 0.0
    for g in a1_graphs():
        e = build_complete_incidence(g.n_nodes)
        w = embed_weights(g)
        lap = laplacian_from_weights(e, w)
        sym &= bool(np.array_equal(lap, lap.T))
        row = max(row, float(np.max(np.abs(lap @ np.ones(g.n_nodes)))))
        signs = rng.choice([-1.0, 1.0], size=e.shape[1])
        flip &= bool(np.array_equal(laplacian_from_weights(e * signs, w), lap))
    record("A2", sym and flip and row <= 1e-12,
           f"symmetric exactly: {sym}, max |L 1| = {row:.1e} (tol 1e-12), flip-invariant: {flip}")


def test_a3_rayleigh_bound():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    ok = True
    worst_slack = np.inf
    for k in range(200):
        n = int(rng.integers(2, 11))
        g = random_signed_graph(n, float(rng.uniform(0.3, 1.0)), float(rng.uniform()), seed=k)
        lam, holds = check_rayleigh_bound(g)
        ok &= holds
        worst_slack = min(worst_slack, lam + n)
    equality = max(abs(check_rayleigh_bound(complete_graph(n, -1.0))[0] + n) for n in (2, 3, 5))
    elapsed = time.perf_counter() - started
    record("A3", ok and equality <= 1e-9 and elapsed < 5.0,
           f"200 graphs, min(lambda_min + N) = {worst_slack:.3f} (>= -1e-9), "
           f"complete negative |lambda_min + N| = {equality:.1e} (tol 1e-9), {elapsed:.2f} s (< 5 s)")


def test_a4_coordinate_change():
    tri = SignedGraph(3, ((1, 2, 0.8), (1, 3, -0.5), (2, 3, 0.6)))
    x0 = np.random.default_rng(0).uniform(-1, 1, 3)
    started = time.perf_counter()
    dev, cubic = cross_validate(PlantSpec(tri, NodeDynamics("cubic_soft")), GainConfig(13.0),
                                SignalConfig(), x0, np.zeros(3), np.zeros(3), horizon=10.0,
                                dt=1e-3, return_trajectories=True)
    _, zero = cross_validate(PlantSpec(tri, NodeDynamics("zero")), GainConfig(13.0), SignalConfig(),
                             x0, np.zeros(3), np.zeros(3), horizon=10.0, return_trajectories=True)
    elapsed = time.perf_counter() - started
    f_dev = float(np.max(np.abs(zero - cubic)))
    record("A4", dev < 1e-8 and f_dev < 1e-10 and elapsed < 10.0,
           f"max coordinate deviation = {dev:.1e} (< 1e-8), zero vs cubic = {f_dev:.1e} (< 1e-10), "
           f"{elapsed:.1f} s (< 10 s)")


def test_a5_lyapunov_identity(benchmark):
    cfg, traj, _ = benchmark
    m = lyapunov_series(traj, cfg.plant.w_bar, cfg.gains.c1, cfg.plant.laplacian)
    ratio = float(np.max(m.identity_ratio(1e-3)))
    violations = m.monotone_violations(1e-6)
    record("A5", ratio <= 1.0 and violations == 0,
           f"max |measured - predicted| / (1e-3 (1 + |predicted|)) = {ratio:.3f} (<= 1) over "
           f"{len(m.v1_dot_measured)} steps, V1 increases > 1e-6: {violations} (= 0)")


@pytest.fixture(scope="module")
def a6_runs(benchmark):
    rows = []
    for seed in A6_SEEDS:
        if seed == 0:
            cfg, traj, elapsed = benchmark
        else:
            cfg, traj, elapsed = benchmark_run(seed=seed, record_stride=10)
        m = lyapunov_series(traj, cfg.plant.w_bar, cfg.gains.c1, cfg.plant.laplacian)
        s = convergence_summary(m, 0.1)
        rec = recover_topology(traj.w_hat[-1], 0.1, cfg.plant.graph)
        rows.append((seed, s, rec, elapsed))
        del traj
    return rows


def test_a6_estimation_error(a6_runs):
    errs = [s.final_est_err for _, s, _, _ in a6_runs]
    record("A6 estimation", max(errs) < 0.05,
           "trailing-10% max |w_tilde| per seed = "
           + ", ".join(f"{e:.3f}" for e in errs) + " (< 0.05)")


def test_a6_topology_recovery(a6_runs):
    scores = [(r.precision, r.recall, r.sign_accuracy) for _, _, r, _ in a6_runs]
    record("A6 recovery", all(sc == (1.0, 1.0, 1.0) for sc in scores),
           "threshold 0.1, (precision, recall, sign accuracy) per seed = "
           + ", ".join("(%g, %g, %g)" % sc for sc in scores) + " (all 1)")


def test_a6_sync_spread(a6_runs):
    spreads = [s.final_sync_err for _, s, _, _ in a6_runs]
    tracking = [s.final_tracking_err for _, s, _, _ in a6_runs]
    record("A6 sync", max(spreads) < 0.05,
           "trailing-10% max pairwise spread per seed = "
           + ", ".join(f"{e:.3f}" for e in spreads) + " (< 0.05); max |x - x_hat| = "
           + ", ".join(f"{e:.1e}" for e in tracking))


def test_a6_runtime(a6_runs):
    times = [t for _, _, _, t in a6_runs]
    record("A6 runtime", max(times) < 60.0,
           "seconds per 200 s run = " + ", ".join(f"{t:.1f}" for t in times) + " (< 60)")


def test_a7_excitation(benchmark):
    dt = 2 * np.pi / 6283
    t = np.arange(6284) * dt
    g = windowed_gram(t, np.column_stack((np.sin(t), np.cos(t))), 0.0, 2 * np.pi).gram
    analytic = float(np.max(np.abs(g - np.pi * np.eye(2))))

    cfg, traj, _ = benchmark
    signal = EdgeExcitation(traj.z_hat, cfg.plant.e_bar, space="state")
    rep = delta_pe_check(traj.times, signal, traj.x_tilde, 0.1, 2.0, 0.1)

    sig = SignalConfig()
    bound = lemma1_frozen_check(lambda s, x: phi_theta(s, x, sig), [np.ones(12)], 2.0,
                                np.linspace(0, 10, 101))[0]
    # 1^T E_bar = 0, so the N x N Gram is singular along the consensus direction
    # in every window; its second eigenvalue is reported alongside
    second = min((np.linalg.eigvalsh(w.gram)[1] for w in rep.qualified_windows), default=0.0)
    passed = analytic < 1e-6 and rep.qualified_count > 0 and rep.mu_estimate > 0 and bound > 0
    record("A7", passed,
           f"(i) |Gram - pi I| = {analytic:.1e} (< 1e-6); (ii) delta=0.1, T=2: "
           f"{rep.qualified_count}/{rep.total_windows} windows qualify, mu = {rep.mu_estimate:.3g} "
           f"(> 0), min second eigenvalue {second:.3g}; (iii) frozen-x bound = {bound:.3f} (> 0)")


def a8_ratio(c1):
    spec = PlantSpec(SignedGraph(2, ((1, 2, -1.0),)), NodeDynamics("cubic_soft"))
    cfg = SimConfig(spec, GainConfig(c1, mode="prop1"), None, horizon=5.0, record_stride=5000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GainWarning)   # c1 = 1 is deliberately too small
        traj = simulate(cfg)
    return float(np.linalg.norm(traj.x_tilde[-1]) / np.linalg.norm(traj.x_tilde[0]))


def test_a8_gain_condition():
    grow, decay = a8_ratio(1.0), a8_ratio(3.0)
    record("A8", grow > 10 and decay < 0.1,
           f"c1 = 1: |x_tilde(5)| / |x_tilde(0)| = {grow:.1f} (> 10); c1 = 3: {decay:.2e} (< 0.1)")


def test_a9_integrator_order():
    dts = (1e-2, 5e-3, 2.5e-3)
    errs = []
    for dt in dts:
        ys = integrate(lambda t, y: -y, np.array([1.0]), 0.0, dt, int(round(1.0 / dt)))
        errs.append(abs(ys[-1, 0] - np.exp(-1.0)))
    orders = [float(np.log2(errs[k] / errs[k + 1])) for k in range(2)]
    record("A9", min(orders) >= 3.8,
           "error reductions per halving = " + ", ".join(f"{2 ** o:.2f}x" for o in orders)
           + ", observed orders = " + ", ".join(f"{o:.3f}" for o in orders) + " (>= 3.8)")
