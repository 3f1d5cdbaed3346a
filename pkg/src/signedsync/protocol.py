"""Adaptive synchronisation and identification protocol.

State of the protocol is the plant state ``x``, the auxiliary (reference)
state ``x_hat`` and the estimated edge weights ``w_hat``, one per slot of the
complete graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# (amplitude, angular frequency [rad/s], "sin" | "cos")
DEFAULT_PE_TERMS = (
    (0.5, 15 * np.pi, "sin"),
    (0.3, 6 * np.pi, "cos"),
    (-0.5, 8 * np.pi, "sin"),
    (0.7, 12 * np.pi, "cos"),
    (2.0, np.pi, "sin"),
    (-0.3, 2 * np.pi, "cos"),
    (-0.8, 18 * np.pi, "sin"),
)
DEFAULT_KAPPA = 1000.0
DEFAULT_C1 = 13.0


@dataclass(frozen=True)
class SignalConfig:
    kappa: float = DEFAULT_KAPPA
    pe_terms: tuple = DEFAULT_PE_TERMS

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        terms = []
        for term in self.pe_terms:
            amp, omega, kind = term
            if kind not in ("sin", "cos"):
                raise ValidationError(f"phase kind must be 'sin' or 'cos', got {kind!r}")
            terms.append((float(amp), float(omega), kind))
        object.__setattr__(self, "pe_terms", tuple(terms))
        amps = np.array([t[0] for t in terms], dtype=float)
        omegas = np.array([t[1] for t in terms], dtype=float)
        is_cos = np.array([t[2] == "cos" for t in terms], dtype=bool)
        object.__setattr__(self, "_amps", amps)
        object.__setattr__(self, "_omegas", omegas)
        object.__setattr__(self, "_is_cos", is_cos)
        object.__setattr__(self, "_phases", np.where(is_cos, np.pi / 2, 0.0))

    @property
    def bound(self) -> float:
        """Sup of |p_e|; also bounds |phi_theta| and |d phi / d t| / max(omega)."""
        return float(np.sum(np.abs(self._amps)))

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self._omegas))) if len(self._omegas) else 0.0

    def to_dict(self) -> dict:
        return {"kappa": self.kappa,
                "pe_terms": [{"amplitude": a, "omega": w, "kind": k} for a, w, k in self.pe_terms]}


@dataclass(frozen=True)
class GainConfig:
    c1: float = DEFAULT_C1
    mode: str = "prop2"

    def __post_init__(self):
        # c1 = 0 is accepted for negative (instability) experiments
        if not self.c1 >= 0:
            raise ValidationError(f"c1 must be non-negative, got {self.c1}")
        if self.mode not in ("prop1", "prop2"):
            raise ValidationError(f"gain mode must be prop1 or prop2, got {self.mode!r}")


@dataclass
class ProtocolState:
    x: np.ndarray
    x_hat: np.ndarray
    w_hat: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.x_hat = np.asarray(self.x_hat, dtype=float)
        self.w_hat = np.asarray(self.w_hat, dtype=float)
        n = self.x.shape[0]
        if self.x_hat.shape != (n,) or self.w_hat.shape != (n * (n - 1) // 2,):
            raise ValidationError(f"inconsistent state shapes x{self.x.shape}, "
                                  f"x_hat{self.x_hat.shape}, w_hat{self.w_hat.shape}")

    @property
    def x_tilde(self) -> np.ndarray:
        return self.x - self.x_hat


def pe_signal(t: float, cfg: SignalConfig) -> float:
    if len(cfg._amps) == 0:
        return 0.0
    return float(np.dot(cfg._amps, np.sin(cfg._omegas * t + cfg._phases)))


def pe_series(times, cfg: SignalConfig) -> np.ndarray:
    """Vectorised :func:`pe_signal` over an array of times."""
    times = np.asarray(times, dtype=float)
    if len(cfg._amps) == 0:
        return np.zeros_like(times)
    return np.sin(np.multiply.outer(times, cfg._omegas) + cfg._phases) @ cfg._amps


def phi_theta(t: float, x_tilde: np.ndarray, cfg: SignalConfig) -> np.ndarray:
    """tanh(kappa * x_tilde) * p_e(t): excitation that vanishes at x_tilde = 0."""
    return np.tanh(cfg.kappa * np.asarray(x_tilde, dtype=float)) * pe_signal(t, cfg)


def auxiliary_rhs(state: ProtocolState, phi: np.ndarray) -> np.ndarray:
    return -state.x_hat + phi


def control_input(state: ProtocolState, xhat_dot: np.ndarray, f_vals: np.ndarray,
                  gains: GainConfig, e_bar: np.ndarray) -> np.ndarray:
    """u = -F(x) - c1 (x - x_hat) + d/dt x_hat + L_hat x_hat.

    ``xhat_dot`` must be :func:`auxiliary_rhs` evaluated at the same state and
    instant.
    """
    n = state.x.shape[0]
    xhat_dot = np.asarray(xhat_dot, dtype=float)
    f_vals = np.asarray(f_vals, dtype=float)
    if xhat_dot.shape != (n,) or f_vals.shape != (n,) or e_bar.shape != (n, state.w_hat.shape[0]):
        raise ValidationError("control_input: dimension mismatch")
    z_hat = e_bar.T @ state.x_hat
    return -f_vals - gains.c1 * (state.x - state.x_hat) + xhat_dot + e_bar @ (state.w_hat * z_hat)


def weight_update_rhs(state: ProtocolState, e_bar: np.ndarray) -> np.ndarray:
    """Per slot (i, j): -(x_hat_i - x_hat_j) * (x_tilde_i - x_tilde_j)."""
    return -(e_bar.T @ state.x_hat) * (e_bar.T @ state.x_tilde)


def required_gain(mode: str, lambda_min: float | None = None, n: int | None = None) -> float:
    """Lower bound that c1 must strictly exceed.

    prop1 needs the true smallest Laplacian eigenvalue; prop2 only needs the
    number of agents, since lambda_min >= -N for normalised weights.
    """
    if mode == "prop1":
        if lambda_min is None:
            raise ValidationError("prop1 gain condition needs lambda_min")
        return -float(lambda_min)
    if mode == "prop2":
        if n is None:
            raise ValidationError("prop2 gain condition needs the node count")
        return float(n)
    raise ValidationError(f"unknown gain mode {mode!r}")
