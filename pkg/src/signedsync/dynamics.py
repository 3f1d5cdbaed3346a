"""Plant model, closed-loop vector field and the error-coordinate system."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import protocol
from .errors import DivergenceError, ValidationError
from .graph import SignedGraph, build_complete_incidence, embed_weights, laplacian_from_weights
from .integrate import rk4_step
from .protocol import GainConfig, ProtocolState, SignalConfig

OVERFLOW = 1e9

CUSTOM_MAPS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "tanh": np.tanh,
    "neg_sin": lambda x: -np.sin(x),
    "logistic": lambda x: x * (1.0 - x),
}


@dataclass(frozen=True)
class NodeDynamics:
    """Intrinsic scalar map f_i.

    kind is ``zero``, ``linear`` (f(x) = a x), ``cubic_soft`` (x - x^3) or
    ``custom`` with ``name`` one of :data:`CUSTOM_MAPS`.
    """
    kind: str = "cubic_soft"
    a: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("zero", "linear", "cubic_soft", "custom"):
            raise ValidationError(f"unknown node dynamics {self.kind!r}")
        if self.kind == "custom" and self.name not in CUSTOM_MAPS:
            raise ValidationError(f"unknown custom map {self.name!r}; "
                                  f"choose from {sorted(CUSTOM_MAPS)}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.a * x
        if self.kind == "cubic_soft":
            return x - x ** 3
        return CUSTOM_MAPS[self.name](x)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "linear":
            d["a"] = self.a
        if self.kind == "custom":
            d["name"] = self.name
        return d


class PlantSpec:
    """True network: signed graph plus node dynamics (shared or per node)."""

    def __init__(self, graph: SignedGraph,
                 dynamics: NodeDynamics | Sequence[NodeDynamics] = NodeDynamics()):
        if graph.n_nodes < 2:
            raise ValidationError("plant needs at least two agents")
        self.graph = graph
        if isinstance(dynamics, NodeDynamics):
            self.dynamics = dynamics
        else:
            dynamics = tuple(dynamics)
            if len(dynamics) != graph.n_nodes:
                raise ValidationError(f"{len(dynamics)} node maps for {graph.n_nodes} nodes")
            self.dynamics = dynamics
        self.n = graph.n_nodes
        self.e_bar = build_complete_incidence(self.n)
        self.w_bar = embed_weights(graph)
        self.laplacian = laplacian_from_weights(self.e_bar, self.w_bar)

    @property
    def m_bar(self) -> int:
        return self.e_bar.shape[1]

    def f(self, x: np.ndarray) -> np.ndarray:
        if isinstance(self.dynamics, NodeDynamics):
            return self.dynamics(x)
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for i, fi in enumerate(self.dynamics):
            out[..., i] = fi(x[..., i])
        return out


def plant_rhs(x: np.ndarray, u: np.ndarray, spec: PlantSpec) -> np.ndarray:
    """F(x) - L x + u."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (spec.n,) or u.shape != (spec.n,):
        raise ValidationError(f"plant_rhs expects vectors of length {spec.n}")
    return spec.f(x) - spec.laplacian @ x + u


class ClosedLoop:
    """Vector field of the stacked state [x, x_hat, w_hat] under the protocol.

    One excitation evaluation per call, shared by the auxiliary system and
    the control input.
    """

    def __init__(self, spec: PlantSpec, gains: GainConfig, signal: SignalConfig | None):
        self.spec = spec
        self.gains = gains
        self.signal = signal
        self.n = spec.n
        self.m = spec.m_bar

    def split(self, y: np.ndarray) -> ProtocolState:
        n = self.n
        return ProtocolState(y[:n], y[n:2 * n], y[2 * n:])

    def excitation(self, t: float, x_tilde: np.ndarray) -> np.ndarray:
        if self.signal is None:
            return np.zeros(self.n)
        return protocol.phi_theta(t, x_tilde, self.signal)

    def parts(self, t: float, y: np.ndarray):
        """(x_dot, x_hat_dot, w_hat_dot, u) at (t, y)."""
        state = self.split(y)
        e_bar = self.spec.e_bar
        xhat_dot = protocol.auxiliary_rhs(state, self.excitation(t, state.x_tilde))
        u = protocol.control_input(state, xhat_dot, self.spec.f(state.x), self.gains, e_bar)
        x_dot = plant_rhs(state.x, u, self.spec)
        w_dot = protocol.weight_update_rhs(state, e_bar)
        return x_dot, xhat_dot, w_dot, u

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        x_dot, xhat_dot, w_dot, _ = self.parts(t, y)
        return np.concatenate((x_dot, xhat_dot, w_dot))


def error_system_rhs(t: float, x_tilde: np.ndarray, w_tilde: np.ndarray, x_hat: np.ndarray,
                     c1: float, laplacian: np.ndarray, e_bar: np.ndarray):
    """Linear time-varying error dynamics driven by z_hat = E^T x_hat.

    Returns (d x_tilde/dt, d w_tilde/dt).
    """
    z_hat = e_bar.T @ x_hat
    xt_dot = -c1 * x_tilde - laplacian @ x_tilde - e_bar @ (z_hat * w_tilde)
    wt_dot = z_hat * (e_bar.T @ x_tilde)
    return xt_dot, wt_dot


def error_coordinates_rhs(spec: PlantSpec, gains: GainConfig, signal: SignalConfig | None):
    """Stacked [x_tilde, w_tilde, x_hat] field; x_hat is co-integrated."""
    n, m = spec.n, spec.m_bar

    def rhs(t, y):
        x_tilde, w_tilde, x_hat = y[:n], y[n:n + m], y[n + m:]
        xt_dot, wt_dot = error_system_rhs(t, x_tilde, w_tilde, x_hat, gains.c1,
                                          spec.laplacian, spec.e_bar)
        phi = np.zeros(n) if signal is None else protocol.phi_theta(t, x_tilde, signal)
        xh_dot = -x_hat + phi
        return np.concatenate((xt_dot, wt_dot, xh_dot))

    return rhs


def _check_bounded(y, t, run):
    if not np.all(np.abs(y) <= OVERFLOW):
        raise DivergenceError(f"{run} run diverged (|state| > {OVERFLOW:g}) at t={t:.6g}", t=t)


def cross_validate(spec: PlantSpec, gains: GainConfig, signal: SignalConfig | None,
                   x0, x_hat0, w_hat0, horizon: float, dt: float = 1e-3,
                   return_trajectories: bool = False):
    """Integrate the closed loop in original and in error coordinates.

    Returns the max over the step grid of |x_tilde_a - x_tilde_b| +
    |w_tilde_a - w_tilde_b| (max-norms). With ``return_trajectories`` also
    returns the original-coordinate states, one row per step.
    """
    n, m = spec.n, spec.m_bar
    x0 = np.asarray(x0, dtype=float)
    x_hat0 = np.asarray(x_hat0, dtype=float)
    w_hat0 = np.asarray(w_hat0, dtype=float)
    n_steps = int(round(horizon / dt))
    loop = ClosedLoop(spec, gains, signal)
    err_rhs = error_coordinates_rhs(spec, gains, signal)

    ya = np.concatenate((x0, x_hat0, w_hat0))
    yb = np.concatenate((x0 - x_hat0, spec.w_bar - w_hat0, x_hat0))
    states = [ya] if return_trajectories else None
    worst = 0.0
    for k in range(n_steps):
        t = k * dt
        ya = rk4_step(loop, ya, t, dt)
        yb = rk4_step(err_rhs, yb, t, dt)
        _check_bounded(ya, t + dt, "original-coordinate")
        _check_bounded(yb, t + dt, "error-coordinate")
        xt_a = ya[:n] - ya[n:2 * n]
        wt_a = spec.w_bar - ya[2 * n:]
        dev = np.max(np.abs(xt_a - yb[:n])) + np.max(np.abs(wt_a - yb[n:n + m]))
        worst = max(worst, dev)
        if return_trajectories:
            states.append(ya)
    if return_trajectories:
        return worst, np.array(states)
    return worst
