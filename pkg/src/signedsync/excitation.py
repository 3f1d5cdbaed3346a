"""Persistency-of-excitation checks on sampled signals.

A signal is anything sampled on a uniform time grid: a vector series
(K x n), a matrix series (K x n x m, integrand B B^T), or the edge-space
excitation ``E_bar diag(z_hat)`` wrapped in :class:`EdgeExcitation`.
Integrals use the trapezoidal rule on the sample grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError, ValidationError
from .graph import eigvalsh

GRID_TOL = 1e-9


class SampledSignal:
    """Vector (K x n) or matrix (K x n x m) samples; Gram integrand B B^T."""

    def __init__(self, samples):
        s = np.asarray(samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim not in (2, 3):
            raise ValidationError(f"samples must be 1-, 2- or 3-dimensional, got {s.ndim}")
        self.samples = s

    def __len__(self):
        return self.samples.shape[0]

    def scaled(self, alpha: float) -> "SampledSignal":
        return SampledSignal(alpha * self.samples)

    def gram(self, i0: int, i1: int, weights: np.ndarray) -> np.ndarray:
        s = self.samples[i0:i1 + 1]
        if s.ndim == 2:
            return np.einsum("k,ki,kj->ij", weights, s, s)
        return np.einsum("k,kia,kja->ij", weights, s, s)


class EdgeExcitation:
    """B(t) = E_bar diag(z_hat(t)) without materialising B.

    space="state" integrates B B^T = E_bar diag(z^2) E_bar^T (N x N);
    space="edge" integrates B^T B = (E_bar^T E_bar) * (z z^T) (M x M), the
    form that governs weight-error observability.
    """

    def __init__(self, z_hat, e_bar, space: str = "state"):
        if space not in ("state", "edge"):
            raise ValidationError(f"space must be 'state' or 'edge', got {space!r}")
        self.z_hat = np.asarray(z_hat, dtype=float)
        self.e_bar = np.asarray(e_bar, dtype=float)
        if self.z_hat.ndim != 2 or self.z_hat.shape[1] != self.e_bar.shape[1]:
            raise ValidationError("z_hat columns must match the incidence matrix")
        self.space = space
        self._ete = self.e_bar.T @ self.e_bar

    def __len__(self):
        return self.z_hat.shape[0]

    def scaled(self, alpha: float) -> "EdgeExcitation":
        return EdgeExcitation(alpha * self.z_hat, self.e_bar, self.space)

    def gram(self, i0: int, i1: int, weights: np.ndarray) -> np.ndarray:
        z = self.z_hat[i0:i1 + 1]
        if self.space == "state":
            return (self.e_bar * (weights @ (z * z))) @ self.e_bar.T
        return self._ete * np.einsum("k,ka,kb->ab", weights, z, z)


def as_signal(signal):
    if isinstance(signal, (SampledSignal, EdgeExcitation)):
        return signal
    return SampledSignal(signal)


@dataclass
class GramWindow:
    t_start: float
    T: float
    gram: np.ndarray = field(repr=False)
    min_eig: float

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "min_eig": self.min_eig}


def _grid_step(times) -> float:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise ValidationError("need at least two time samples")
    steps = np.diff(times)
    h = (times[-1] - times[0]) / (len(times) - 1)
    if not h > 0 or np.max(np.abs(steps - h)) > 1e-6 * h + 1e-12:
        raise ValidationError("time samples must be uniformly spaced")
    return h


def _window_indices(times, h, t_start, T):
    if not T > 0:
        raise ValidationError(f"window length must be positive, got {T}")
    i0 = int(round((t_start - times[0]) / h))
    n = int(round(T / h))
    i1 = i0 + n
    if i0 < 0 or i1 > len(times) - 1 or n < 1:
        raise RangeError(f"window [{t_start:g}, {t_start + T:g}] outside the recording "
                         f"[{times[0]:g}, {times[-1]:g}]")
    return i0, i1


def _trapezoid_weights(n_points: int, h: float) -> np.ndarray:
    w = np.full(n_points, h)
    w[0] = w[-1] = 0.5 * h
    return w


def windowed_gram(times, signal, t_start: float, T: float) -> GramWindow:
    """Integral of B B^T over [t_start, t_start + T] with its smallest eigenvalue."""
    times = np.asarray(times, dtype=float)
    signal = as_signal(signal)
    if len(signal) != len(times):
        raise ValidationError("signal and time grid lengths differ")
    h = _grid_step(times)
    i0, i1 = _window_indices(times, h, t_start, T)
    g = signal.gram(i0, i1, _trapezoid_weights(i1 - i0 + 1, h))
    g = 0.5 * (g + g.T)
    return GramWindow(float(times[i0]), T, g, float(eigvalsh(g)[0]))


def window_starts(times, T: float, stride: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if not stride > 0:
        raise ValidationError(f"stride must be positive, got {stride}")
    span = times[-1] - times[0]
    if T > span + GRID_TOL:
        raise RangeError(f"window length {T:g} exceeds the recorded horizon {span:g}")
    count = int(np.floor((span - T) / stride + GRID_TOL)) + 1
    return times[0] + stride * np.arange(count)


def gram_windows(times, signal, T: float, stride: float) -> list[GramWindow]:
    signal = as_signal(signal)
    return [windowed_gram(times, signal, t0, T) for t0 in window_starts(times, T, stride)]


def pe_level(times, signal, T: float, stride: float) -> float:
    """Smallest Gram eigenvalue over all windows of length T advanced by stride.

    A positive value certifies excitation at level (mu, T) over the recording.
    """
    return min(w.min_eig for w in gram_windows(times, signal, T, stride))


@dataclass
class DeltaPeReport:
    delta: float
    T: float
    stride: float
    qualified_windows: list
    mu_estimate: float
    qualified_count: int
    total_windows: int = 0
    radius: float | None = None

    def to_dict(self) -> dict:
        d = {"delta": self.delta, "T": self.T, "stride": self.stride,
             "mu_estimate": self.mu_estimate, "qualified_count": self.qualified_count,
             "windows": [w.to_dict() for w in self.qualified_windows]}
        if self.radius is not None:
            d["radius"] = self.radius
        return d


def delta_pe_check(times, signal, x1, delta: float, T: float, stride: float,
                   radius: float | None = None) -> DeltaPeReport:
    """Windowed delta-PE test.

    A window qualifies when the sampled minimum of |x1| over it is at least
    ``delta`` (Euclidean norm for vector x1). Only qualified windows enter
    ``mu_estimate``; with none qualified it is 0, never positive.
    """
    times = np.asarray(times, dtype=float)
    signal = as_signal(signal)
    x1 = np.asarray(x1, dtype=float)
    if x1.shape[0] != len(times):
        raise ValidationError("x1 and signal must share the time grid")
    mag = np.abs(x1) if x1.ndim == 1 else np.linalg.norm(x1.reshape(len(times), -1), axis=1)
    h = _grid_step(times)
    starts = window_starts(times, T, stride)
    qualified = []
    for t0 in starts:
        i0, i1 = _window_indices(times, h, t0, T)
        if mag[i0:i1 + 1].min() >= delta:
            qualified.append(windowed_gram(times, signal, t0, T))
    mu = min((w.min_eig for w in qualified), default=0.0)
    return DeltaPeReport(delta, T, stride, qualified, float(mu), len(qualified),
                         len(starts), radius)


def lemma1_frozen_check(generator, x_points, T: float, t_grid, dt: float = 1e-3) -> list[float]:
    """Lower bound over t in ``t_grid`` of the integral of |phi(tau, x)| on [t, t+T].

    ``generator(t, x)`` is evaluated with x frozen; |.| is the Euclidean norm.
    Returns one bound per point (0 for points where phi vanishes).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    n = int(round(T / dt))
    if n < 1:
        raise ValidationError("window shorter than the quadrature step")
    h = T / n
    taus = np.arange(int(round((t_grid.max() - t_grid.min() + T) / h)) + 1) * h + t_grid.min()
    weights = _trapezoid_weights(n + 1, h)
    bounds = []
    for x in x_points:
        x = np.asarray(x, dtype=float)
        mags = np.array([np.linalg.norm(np.atleast_1d(generator(tau, x))) for tau in taus])
        best = np.inf
        for t in t_grid:
            i0 = int(round((t - taus[0]) / h))
            best = min(best, float(weights @ mags[i0:i0 + n + 1]))
        bounds.append(best)
    return bounds
