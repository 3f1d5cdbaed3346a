"""Lyapunov monitoring, error metrics and topology recovery."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graph import SignedGraph, edge_index, edge_pair, embed_weights
from .sim import Trajectory

IDENTITY_RTOL = 1e-3
MONOTONE_TOL = 1e-6


@dataclass
class MetricsSeries:
    times: np.ndarray
    v1: np.ndarray
    v1_dot_measured: np.ndarray     # forward differences, len(times) - 1
    v1_dot_predicted: np.ndarray    # -x_tilde^T (c1 I + L) x_tilde at each sample
    est_err_norm: np.ndarray        # Euclidean |w_tilde|
    est_err_max: np.ndarray         # max_k |w_tilde_k|
    sync_err: np.ndarray            # max_ij |x_i - x_j|
    tracking_err: np.ndarray        # max_i |x_i - x_hat_i|
    aux_norm: np.ndarray

    @property
    def v1_dot_predicted_mid(self) -> np.ndarray:
        """Predicted derivative averaged over each sampling interval.

        This is what a forward difference of V1 approximates to second order.
        """
        p = self.v1_dot_predicted
        return 0.5 * (p[1:] + p[:-1])

    def identity_ratio(self, rtol: float = IDENTITY_RTOL) -> np.ndarray:
        """|measured - predicted| / (rtol (1 + |predicted|)); <= 1 passes."""
        pred = self.v1_dot_predicted_mid
        return np.abs(self.v1_dot_measured - pred) / (rtol * (1.0 + np.abs(pred)))

    def monotone_violations(self, tol: float = MONOTONE_TOL) -> int:
        return int(np.count_nonzero(np.diff(self.v1) > tol))

    def to_csv(self, path) -> None:
        measured = np.append(self.v1_dot_measured, np.nan)
        cols = {"t": self.times, "v1": self.v1, "v1_dot_measured": measured,
                "v1_dot_predicted": self.v1_dot_predicted, "est_err_norm": self.est_err_norm,
                "est_err_max": self.est_err_max, "sync_err": self.sync_err,
                "tracking_err": self.tracking_err, "aux_norm": self.aux_norm}
        _write_columns(path, cols)


def _write_columns(path, cols: dict) -> None:
    data = np.column_stack(list(cols.values()))
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def lyapunov_series(traj: Trajectory, truth: np.ndarray, c1: float,
                    laplacian: np.ndarray) -> MetricsSeries:
    """V1 = |x_tilde|^2 / 2 + |w_tilde|^2 / 2 along a trajectory, with its
    measured and predicted time derivatives and the error metrics."""
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (traj.m_bar,) or laplacian.shape != (traj.n, traj.n):
        raise ValidationError("truth weights / Laplacian do not match the trajectory")
    if len(traj.times) < 2:
        raise ValidationError("need at least two samples")
    steps = np.diff(traj.times)
    h = steps[0]
    if np.max(np.abs(steps - h)) > 1e-9 * max(1.0, traj.times[-1]):
        raise ValidationError("trajectory grid is not uniform")
    xt = traj.x_tilde
    wt = truth - traj.w_hat
    v1 = 0.5 * np.einsum("ki,ki->k", xt, xt) + 0.5 * np.einsum("ka,ka->k", wt, wt)
    gain = c1 * np.eye(traj.n) + laplacian
    predicted = -np.einsum("ki,ij,kj->k", xt, gain, xt)
    measured = np.diff(v1) / h
    return MetricsSeries(
        times=traj.times, v1=v1, v1_dot_measured=measured, v1_dot_predicted=predicted,
        est_err_norm=np.linalg.norm(wt, axis=1), est_err_max=np.max(np.abs(wt), axis=1),
        sync_err=np.ptp(traj.x, axis=1), tracking_err=np.max(np.abs(xt), axis=1),
        aux_norm=np.linalg.norm(traj.x_hat, axis=1))


@dataclass
class ConvergenceSummary:
    final_est_err: float
    final_sync_err: float
    v1_monotone_violations: int
    final_tracking_err: float = 0.0
    tail_start: float = 0.0

    def __iter__(self):
        return iter((self.final_est_err, self.final_sync_err, self.v1_monotone_violations))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def convergence_summary(metrics: MetricsSeries, tail_fraction: float = 0.1,
                        tol: float = MONOTONE_TOL) -> ConvergenceSummary:
    """Max-norm errors over the trailing ``tail_fraction`` of the run and the
    number of steps where V1 rises by more than ``tol``."""
    if not (0.0 < tail_fraction <= 1.0):
        raise ValidationError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    t = metrics.times
    t_cut = t[-1] - tail_fraction * (t[-1] - t[0])
    tail = t >= t_cut - 1e-12
    return ConvergenceSummary(
        final_est_err=float(metrics.est_err_max[tail].max()),
        final_sync_err=float(metrics.sync_err[tail].max()),
        v1_monotone_violations=metrics.monotone_violations(tol),
        final_tracking_err=float(metrics.tracking_err[tail].max()),
        tail_start=float(t[tail][0]))


@dataclass
class RecoveredTopology:
    threshold: float
    edges: list = field(default_factory=list)   # (i, j, sign, weight_estimate)
    precision: float = 1.0
    recall: float = 1.0
    sign_accuracy: float = 1.0

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "precision": self.precision, "recall": self.recall,
                "sign_accuracy": self.sign_accuracy,
                "edges": [{"i": i, "j": j, "sign": s, "w": w} for i, j, s, w in self.edges]}


def recover_topology(w_hat_final, threshold: float, truth: SignedGraph) -> RecoveredTopology:
    """Threshold |w_hat_k| to recover edges and signs, scored against ``truth``.

    Vacuous ratios (nothing predicted, no true edges, no true positives)
    are reported as 1.
    """
    if not threshold > 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    w_hat = np.asarray(w_hat_final, dtype=float)
    n = truth.n_nodes
    if w_hat.shape != (truth.m_bar,):
        raise ValidationError(f"expected {truth.m_bar} weight estimates, got {w_hat.shape}")
    w_true = embed_weights(truth)
    found = []
    for k in np.flatnonzero(np.abs(w_hat) > threshold):
        i, j = edge_pair(int(k) + 1, n)
        found.append((i, j, int(np.sign(w_hat[k])), float(w_hat[k])))
    true_pos = [e for e in found if w_true[edge_index(e[0], e[1], n) - 1] != 0.0]
    n_true = int(np.count_nonzero(w_true))
    precision = len(true_pos) / len(found) if found else 1.0
    recall = len(true_pos) / n_true if n_true else 1.0
    if true_pos:
        right = sum(1 for i, j, s, _ in true_pos if s == np.sign(w_true[edge_index(i, j, n) - 1]))
        sign_accuracy = right / len(true_pos)
    else:
        sign_accuracy = 1.0
    return RecoveredTopology(threshold, found, precision, recall, sign_accuracy)


def write_figure_series(metrics: MetricsSeries, traj: Trajectory, truth: SignedGraph,
                        out_dir) -> dict:
    """Plot-ready CSVs: weight errors, weight estimates and synchronisation errors.

    Weight columns cover the true edges only, labelled ``w_<i>_<j>``.
    """
    out_dir = Path(out_dir)
    n = truth.n_nodes
    w_true = embed_weights(truth)
    slots = [edge_index(i, j, n) - 1 for i, j, _ in truth.edges]
    labels = [f"w_{i}_{j}" for i, j, _ in truth.edges]
    paths = {}

    cols = {"t": traj.times}
    cols.update({lab: w_true[k] - traj.w_hat[:, k] for lab, k in zip(labels, slots)})
    paths["estimation_errors"] = out_dir / "fig_estimation_errors.csv"
    _write_columns(paths["estimation_errors"], cols)

    cols = {"t": traj.times}
    cols.update({lab: traj.w_hat[:, k] for lab, k in zip(labels, slots)})
    paths["estimated_weights"] = out_dir / "fig_estimated_weights.csv"
    _write_columns(paths["estimated_weights"], cols)

    cols = {"t": traj.times}
    cols.update({f"xtilde_{i}": traj.x_tilde[:, i - 1] for i in range(1, n + 1)})
    cols["sync_spread"] = metrics.sync_err
    paths["sync_errors"] = out_dir / "fig_sync_errors.csv"
    _write_columns(paths["sync_errors"], cols)
    return {k: str(v) for k, v in paths.items()}


def write_summary(path, summary: ConvergenceSummary, recovered: RecoveredTopology,
                  metrics: MetricsSeries, extra: dict | None = None) -> dict:
    ratio = metrics.identity_ratio()
    doc = {"convergence": summary.to_dict(),
           "topology": recovered.to_dict(),
           "lyapunov_identity_max_ratio": float(ratio.max()) if len(ratio) else 0.0,
           "lyapunov_identity_holds": bool(np.all(ratio <= 1.0))}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return doc
