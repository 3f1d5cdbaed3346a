"""Fixed-step co-integration of plant, auxiliary system and weight estimates."""
from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import protocol
from .dynamics import OVERFLOW, ClosedLoop, PlantSpec
from .errors import DivergenceError, FormatError, ValidationError
from .graph import spectral_report
from .integrate import rk4_step
from .protocol import GainConfig, SignalConfig

log = logging.getLogger(__name__)

__all__ = ["SimConfig", "Trajectory", "simulate", "rk4_step", "GainWarning"]


class GainWarning(UserWarning):
    """c1 does not exceed the selected gain condition."""


@dataclass
class SimConfig:
    plant: PlantSpec
    gains: GainConfig = field(default_factory=GainConfig)
    # None switches the excitation off (phi = 0)
    signal: SignalConfig | None = field(default_factory=SignalConfig)
    dt: float = 1e-3
    horizon: float = 200.0
    record_stride: int = 1
    seed: int = 0
    x0: np.ndarray | None = None
    x_hat0: np.ndarray | None = None
    w_hat0: np.ndarray | None = None
    init_range: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ValidationError(f"horizon {self.horizon} shorter than dt {self.dt}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError(f"record_stride must be a positive integer, got {self.record_stride}")
        self.record_stride = int(self.record_stride)
        n, m = self.plant.n, self.plant.m_bar
        for name, size in (("x0", n), ("x_hat0", n), ("w_hat0", m)):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (size,):
                    raise ValidationError(f"{name} must have length {size}, got shape {v.shape}")
                setattr(self, name, v)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def initial_state(self) -> np.ndarray:
        """Stacked [x0, x_hat0, w_hat0]; unset parts are drawn from ``seed``."""
        n, m = self.plant.n, self.plant.m_bar
        rng = np.random.default_rng(self.seed)
        drawn = rng.uniform(-self.init_range, self.init_range, n)
        x0 = drawn if self.x0 is None else self.x0
        x_hat0 = np.zeros(n) if self.x_hat0 is None else self.x_hat0
        w_hat0 = np.zeros(m) if self.w_hat0 is None else self.w_hat0
        return np.concatenate((x0, x_hat0, w_hat0))

    def gain_margin(self) -> float:
        """c1 minus the bound required by the configured gain mode."""
        if self.gains.mode == "prop1":
            lam = spectral_report(self.plant.laplacian).lambda_min
            return self.gains.c1 - protocol.required_gain("prop1", lambda_min=lam)
        return self.gains.c1 - protocol.required_gain("prop2", n=self.plant.n)


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    w_hat: np.ndarray
    u: np.ndarray | None = None
    _z_hat: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        k = len(self.times)
        if self.x.shape[0] != k or self.x_hat.shape != self.x.shape or self.w_hat.shape[0] != k:
            raise ValidationError("trajectory arrays do not share the time grid")
        n = self.x.shape[1]
        if self.w_hat.shape[1] != n * (n - 1) // 2:
            raise ValidationError("w_hat width does not match the node count")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m_bar(self) -> int:
        return self.w_hat.shape[1]

    @property
    def sample_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def x_tilde(self) -> np.ndarray:
        return self.x - self.x_hat

    @property
    def z_hat(self) -> np.ndarray:
        if self._z_hat is None:
            heads, tails = np.triu_indices(self.n, 1)
            self._z_hat = self.x_hat[:, heads] - self.x_hat[:, tails]
        return self._z_hat

    def decimate(self, every: int) -> "Trajectory":
        s = slice(None, None, every)
        return Trajectory(self.times[s], self.x[s], self.x_hat[s], self.w_hat[s],
                          None if self.u is None else self.u[s])

    def header(self) -> list[str]:
        return (["t"] + [f"x_{i}" for i in range(1, self.n + 1)]
                + [f"xhat_{i}" for i in range(1, self.n + 1)]
                + [f"what_{k}" for k in range(1, self.m_bar + 1)])

    def to_csv(self, path) -> None:
        data = np.column_stack((self.times, self.x, self.x_hat, self.w_hat))
        buf = io.StringIO()
        np.savetxt(buf, data, fmt="%.17g", delimiter=",")
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(self.header()) + "\n")
            fh.write(buf.getvalue())

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        path = Path(path)
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), None)
        if not header:
            raise FormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if "t" not in header:
            raise FormatError(f"{path}: missing column 't'")
        n = sum(1 for h in header if h.startswith("x_"))
        if n < 2:
            raise FormatError(f"{path}: missing column 'x_1'" if n == 0 else f"{path}: missing column 'x_2'")
        expected = (["t"] + [f"x_{i}" for i in range(1, n + 1)]
                    + [f"xhat_{i}" for i in range(1, n + 1)]
                    + [f"what_{k}" for k in range(1, n * (n - 1) // 2 + 1)])
        for col in expected:
            if col not in header:
                raise FormatError(f"{path}: missing column '{col}'")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        cols = {h: i for i, h in enumerate(header)}
        pick = lambda names: data[:, [cols[c] for c in names]]
        return cls(data[:, cols["t"]],
                   pick(expected[1:n + 1]),
                   pick(expected[n + 1:2 * n + 1]),
                   pick(expected[2 * n + 1:]))


def _recorded_inputs(loop: ClosedLoop, times, x, x_hat, w_hat) -> np.ndarray:
    """Control input at every recorded sample, vectorised over time."""
    spec = loop.spec
    x_tilde = x - x_hat
    if loop.signal is None:
        phi = np.zeros_like(x)
    else:
        phi = np.tanh(loop.signal.kappa * x_tilde) * protocol.pe_series(times, loop.signal)[:, None]
    xhat_dot = -x_hat + phi
    z_hat = x_hat @ spec.e_bar
    return -spec.f(x) - loop.gains.c1 * x_tilde + xhat_dot + (w_hat * z_hat) @ spec.e_bar.T


def simulate(cfg: SimConfig) -> Trajectory:
    """Run the closed loop from ``cfg`` and record every ``record_stride`` steps.

    Raises DivergenceError once any state entry exceeds 1e9 in magnitude.
    """
    margin = cfg.gain_margin()
    if margin <= 0:
        msg = (f"c1={cfg.gains.c1} does not exceed the {cfg.gains.mode} requirement "
               f"(margin {margin:.4g}); the error dynamics may be unstable")
        warnings.warn(msg, GainWarning, stacklevel=2)
        log.warning(msg)

    loop = ClosedLoop(cfg.plant, cfg.gains, cfg.signal)
    n = cfg.plant.n
    dt, stride, n_steps = cfg.dt, cfg.record_stride, cfg.n_steps
    n_rec = n_steps // stride + 1
    y = cfg.initial_state()
    states = np.empty((n_rec, y.size))
    states[0] = y
    r = 1
    for k in range(n_steps):
        y = rk4_step(loop, y, k * dt, dt)
        if np.max(np.abs(y)) > OVERFLOW:
            t = (k + 1) * dt
            raise DivergenceError(f"state exceeded {OVERFLOW:g} at t={t:.6g}", t=t)
        if (k + 1) % stride == 0:
            states[r] = y
            r += 1
    times = np.arange(n_rec) * (stride * dt)
    x, x_hat, w_hat = states[:, :n], states[:, n:2 * n], states[:, 2 * n:]
    u = _recorded_inputs(loop, times, x, x_hat, w_hat)
    return Trajectory(times, x, x_hat, w_hat, u)
