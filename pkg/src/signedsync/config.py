"""TOML config and graph files.

Graph file::

    n_nodes = 3
    normalized = true
    [[edge]]
    i = 1
    j = 2
    w = 0.8

Simulation config sections: [graph] (``file``, inline ``n_nodes``/``edge``
tables, or ``preset = "benchmark"`` with ``magnitude_seed``), [dynamics], [gains],
[signal], [sim], [init], [analysis].
"""
from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .dynamics import NodeDynamics, PlantSpec
from .errors import FormatError, ValidationError
from .graph import SignedGraph, benchmark_graph
from .protocol import DEFAULT_PE_TERMS, GainConfig, SignalConfig
from .sim import SimConfig

DEFAULTS = {
    "dynamics": {"kind": "cubic_soft"},
    "gains": {"c1": 13.0, "mode": "prop2"},
    "signal": {"enabled": True, "kappa": 1000.0},
    "sim": {"dt": 1e-3, "horizon": 200.0, "record_stride": 1, "output_stride": 1,
            "seed": 0, "init_range": 1.0},
    "analysis": {"threshold": 0.1, "tail_fraction": 0.1},
}
SECTIONS = ("graph", "dynamics", "gains", "signal", "sim", "init", "analysis")


def _load_toml(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text file ({exc})") from None
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        # tomli messages carry "(at line L, column C)"
        raise FormatError(f"{path}: {exc}") from None


def graph_from_dict(doc: dict, where: str = "graph") -> SignedGraph:
    if "n_nodes" not in doc:
        raise ValidationError(f"{where}: missing key 'n_nodes'")
    edges = []
    for idx, e in enumerate(doc.get("edge", [])):
        missing = [k for k in ("i", "j", "w") if k not in e]
        if missing:
            raise ValidationError(f"{where}: edge #{idx + 1} missing {', '.join(missing)}")
        edges.append((e["i"], e["j"], e["w"]))
    try:
        return SignedGraph(doc["n_nodes"], tuple(edges), bool(doc.get("normalized", False)))
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def graph_to_dict(g: SignedGraph) -> dict:
    return {"n_nodes": g.n_nodes, "normalized": g.normalized,
            "edge": [{"i": i, "j": j, "w": w} for i, j, w in g.edges]}


def read_graph(path) -> SignedGraph:
    return graph_from_dict(_load_toml(path), where=str(path))


def write_graph(g: SignedGraph, path) -> None:
    with open(path, "wb") as fh:
        tomli_w.dump(graph_to_dict(g), fh)


def _resolve_graph(section: dict, base: Path) -> SignedGraph:
    if "preset" in section:
        if section["preset"] != "benchmark":
            raise ValidationError(f"[graph] unknown preset {section['preset']!r}")
        return benchmark_graph(seed=int(section.get("magnitude_seed", 0)),
                               low=float(section.get("magnitude_low", 0.3)),
                               high=float(section.get("magnitude_high", 1.0)))
    if "file" in section:
        return read_graph(base / section["file"])
    return graph_from_dict(section)


def _signal_terms(section: dict):
    if "term" not in section:
        return DEFAULT_PE_TERMS
    terms = []
    for idx, t in enumerate(section["term"]):
        try:
            terms.append((float(t["amplitude"]), float(t["omega"]), t["kind"]))
        except KeyError as exc:
            raise ValidationError(f"[signal] term #{idx + 1} missing {exc}") from None
    return tuple(terms)


def resolve(doc: dict, base: Path = Path(".")) -> dict:
    """Fill defaults and inline the graph, giving a self-contained config."""
    unknown = set(doc) - set(SECTIONS)
    if unknown:
        raise ValidationError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    if "graph" not in doc:
        raise ValidationError("missing [graph] section")
    out = copy.deepcopy(DEFAULTS)
    for name in SECTIONS:
        if name in doc and name != "graph":
            if not isinstance(doc[name], dict):
                raise ValidationError(f"[{name}] must be a table")
            out.setdefault(name, {}).update(doc[name])
    out["graph"] = graph_to_dict(_resolve_graph(doc["graph"], base))
    sig = out["signal"]
    sig["term"] = [{"amplitude": a, "omega": w, "kind": k} for a, w, k in _signal_terms(sig)]
    return out


def build_sim_config(resolved: dict) -> SimConfig:
    try:
        graph = graph_from_dict(resolved["graph"])
        dyn = resolved["dynamics"]
        dynamics = NodeDynamics(dyn.get("kind", "cubic_soft"), float(dyn.get("a", 0.0)),
                                dyn.get("name", ""))
        plant = PlantSpec(graph, dynamics)
        g = resolved["gains"]
        gains = GainConfig(float(g["c1"]), g.get("mode", "prop2"))
        s = resolved["signal"]
        signal = (SignalConfig(float(s["kappa"]), _signal_terms(s))
                  if s.get("enabled", True) else None)
        sim = resolved["sim"]
        init = resolved.get("init", {})
        return SimConfig(plant, gains, signal, dt=float(sim["dt"]), horizon=float(sim["horizon"]),
                         record_stride=sim["record_stride"], seed=int(sim["seed"]),
                         x0=init.get("x0"), x_hat0=init.get("x_hat0"), w_hat0=init.get("w_hat0"),
                         init_range=float(sim["init_range"]))
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"invalid config: {exc}") from None


def load_config(path) -> tuple[dict, SimConfig]:
    path = Path(path)
    resolved = resolve(_load_toml(path), base=path.parent)
    cfg = build_sim_config(resolved)
    stride = resolved["sim"]["output_stride"]
    if int(stride) != stride or stride < 1:
        raise ValidationError(f"[sim] output_stride must be a positive integer, got {stride}")
    thr = resolved["analysis"]["threshold"]
    if not thr > 0:
        raise ValidationError(f"[analysis] threshold must be positive, got {thr}")
    return resolved, cfg


def dumps(resolved: dict) -> str:
    return tomli_w.dumps(resolved)


def reproduction_config(seed: int = 0, horizon: float = 200.0) -> dict:
    """Built-in config of the 12-agent benchmark run."""
    doc = {
        "graph": {"preset": "benchmark", "magnitude_seed": seed},
        "gains": {"c1": 13.0, "mode": "prop2"},
        "signal": {"kappa": 1000.0},
        "sim": {"dt": 1e-3, "horizon": horizon, "record_stride": 1, "output_stride": 10,
                "seed": seed},
    }
    return resolve(doc)


def set_seed(resolved: dict, seed: int) -> dict:
    out = copy.deepcopy(resolved)
    out["sim"]["seed"] = int(seed)
    return out


def as_array(v):
    return None if v is None else np.asarray(v, dtype=float)
