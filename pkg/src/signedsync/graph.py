"""Undirected signed graphs, complete-graph edge space and repelling Laplacians.

Nodes are numbered 1..N and edge slots 1..N(N-1)/2 in the public API (these
are the labels used in files and CSV headers); arrays are indexed from 0.
Slots follow lexicographic order of the pairs (i, j), i < j.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

RAYLEIGH_SLACK = 1e-9


def n_slots(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> int:
    """1-based slot of the pair (i, j) in the complete graph on n nodes."""
    if not (1 <= i < j <= n):
        raise ValidationError(f"need 1 <= i < j <= n, got i={i}, j={j}, n={n}")
    return (i - 1) * n - i * (i + 1) // 2 + j


def edge_pair(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`edge_index`."""
    m = n_slots(n)
    if not (1 <= k <= m):
        raise ValidationError(f"edge slot {k} out of range 1..{m}")
    i = 1
    # slots of row i end at edge_index(i, n, n)
    while edge_index(i, n, n) < k:
        i += 1
    j = k - edge_index(i, i + 1, n) + i + 1
    return i, j


def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based endpoint arrays (heads, tails) for every slot, in slot order."""
    heads, tails = np.triu_indices(n, 1)
    return heads, tails


@dataclass(frozen=True)
class SignedGraph:
    n_nodes: int
    edges: tuple[tuple[int, int, float], ...] = field(default_factory=tuple)
    normalized: bool = False

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise ValidationError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        clean = []
        seen = set()
        for edge in self.edges:
            try:
                i, j, w = edge
            except (TypeError, ValueError):
                raise ValidationError(f"edge must be (i, j, w), got {edge!r}") from None
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ValidationError(f"self-loop at node {i}")
            if i > j:
                i, j = j, i
            if not (1 <= i and j <= self.n_nodes):
                raise ValidationError(f"edge ({i}, {j}) outside nodes 1..{self.n_nodes}")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            if w == 0.0 or not np.isfinite(w):
                raise ValidationError(f"edge ({i}, {j}) needs a finite nonzero weight, got {w}")
            if self.normalized and abs(w) > 1.0:
                raise ValidationError(f"edge ({i}, {j}) weight {w} violates |w| <= 1")
            seen.add((i, j))
            clean.append((i, j, w))
        clean.sort()
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def m_bar(self) -> int:
        return n_slots(self.n_nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def is_normalized(self) -> bool:
        return all(abs(w) <= 1.0 for _, _, w in self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        for i, j, w in self.edges:
            a[i - 1, j - 1] = a[j - 1, i - 1] = w
        return a

    def degrees(self) -> np.ndarray:
        """Unsigned node degrees (neighbour counts).

        Convenience only; the repelling Laplacian does not use them.
        """
        deg = np.zeros(self.n_nodes, dtype=int)
        for i, j, _ in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return deg

    def degree_matrix(self) -> np.ndarray:
        return np.diag(self.degrees().astype(float))

    def is_connected(self) -> bool:
        if self.n_nodes == 1:
            return True
        parent = list(range(self.n_nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        components = self.n_nodes
        for i, j, _ in self.edges:
            ri, rj = find(i - 1), find(j - 1)
            if ri != rj:
                parent[ri] = rj
                components -= 1
        return components == 1

    def with_weights(self, weights: Iterable[float]) -> "SignedGraph":
        weights = list(weights)
        if len(weights) != self.n_edges:
            raise ValidationError("one weight per edge required")
        return SignedGraph(self.n_nodes,
                           tuple((i, j, w) for (i, j, _), w in zip(self.edges, weights)),
                           self.normalized)


def build_complete_incidence(n: int) -> np.ndarray:
    """N x N(N-1)/2 incidence matrix of the complete graph, +1 at the lower node."""
    if n < 2:
        raise ValidationError(f"complete incidence needs n >= 2, got {n}")
    heads, tails = pair_arrays(n)
    cols = np.arange(n_slots(n))
    e = np.zeros((n, n_slots(n)))
    e[heads, cols] = 1.0
    e[tails, cols] = -1.0
    return e


def embed_weights(g: SignedGraph) -> np.ndarray:
    """Weight vector over the complete-graph slots, zero for absent pairs."""
    w = np.zeros(g.m_bar)
    for i, j, wij in g.edges:
        w[edge_index(i, j, g.n_nodes) - 1] = wij
    return w


def laplacian_from_weights(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    w = np.asarray(w, dtype=float)
    if e.ndim != 2 or w.ndim != 1 or e.shape[1] != w.shape[0]:
        raise ValidationError(f"incidence {e.shape} and weights {w.shape} do not agree")
    return (e * w) @ e.T


def laplacian_direct(g: SignedGraph) -> np.ndarray:
    """Entrywise definition: l_ii = sum_k a_ik (signed), l_ij = -a_ij."""
    a = g.adjacency()
    lap = -a
    for i in range(g.n_nodes):
        lap[i, i] = sum(a[i, k] for k in range(g.n_nodes) if k != i)
    return lap


def graph_laplacian(g: SignedGraph) -> np.ndarray:
    if g.n_nodes < 2:
        return np.zeros((g.n_nodes, g.n_nodes))
    return laplacian_from_weights(build_complete_incidence(g.n_nodes), embed_weights(g))


def _off_norm(a: np.ndarray) -> float:
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalisation of a symmetric matrix.

    Returns (eigenvalues ascending, eigenvectors as columns). Stops once the
    off-diagonal Frobenius norm drops below ``tol * max(1, ||A||_F)``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, np.linalg.norm(a))
    for _ in range(max_sweeps):
        off = _off_norm(a)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    else:
        off = _off_norm(a)
        if off > tol * scale:
            raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


JACOBI_MAX_N = 32


def eigvalsh(a: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix.

    Jacobi up to JACOBI_MAX_N rows, LAPACK beyond (edge-space Grams).
    """
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return np.zeros(0)
    if a.shape[0] > JACOBI_MAX_N:
        return np.linalg.eigvalsh(a)
    return jacobi_eigh(a)[0]


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    lambda_min: float
    lambda_max: float
    kernel_residual: float

    def to_dict(self) -> dict:
        return {"eigenvalues": [float(x) for x in self.eigenvalues],
                "lambda_min": self.lambda_min,
                "lambda_max": self.lambda_max,
                "kernel_residual": self.kernel_residual}


def spectral_report(lap: np.ndarray, sym_tol: float = 1e-10) -> SpectralReport:
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1] or lap.shape[0] == 0:
        raise ValidationError(f"need a non-empty square matrix, got shape {lap.shape}")
    if np.max(np.abs(lap - lap.T)) > sym_tol:
        raise ValidationError("matrix is not symmetric")
    vals = eigvalsh(0.5 * (lap + lap.T))
    residual = float(np.linalg.norm(lap @ np.ones(lap.shape[0])))
    return SpectralReport(vals, float(vals[0]), float(vals[-1]), residual)


def check_rayleigh_bound(g: SignedGraph) -> tuple[float, bool]:
    """Smallest Laplacian eigenvalue and whether it respects lambda_min >= -N."""
    if not g.is_normalized():
        raise ValidationError("Rayleigh bound only applies to graphs with |w| <= 1")
    lam = spectral_report(graph_laplacian(g)).lambda_min
    return lam, lam >= -g.n_nodes - RAYLEIGH_SLACK


def complete_graph(n: int, weight: float = -1.0) -> SignedGraph:
    return SignedGraph(n, tuple((i, j, weight) for i in range(1, n + 1) for j in range(i + 1, n + 1)),
                       normalized=abs(weight) <= 1.0)


# The 12-agent benchmark topology: signs are fixed, magnitudes are drawn.
BENCHMARK_N = 12
BENCHMARK_COOPERATIVE = ((1, 4), (1, 5), (1, 8), (1, 10), (1, 12), (2, 5),
                         (3, 4), (3, 6), (4, 9), (8, 9), (9, 11))
BENCHMARK_ANTAGONISTIC = ((1, 3), (1, 6), (1, 11), (2, 6), (4, 7), (4, 8),
                          (4, 10), (7, 8), (9, 10))


def benchmark_graph(magnitudes: Sequence[float] | None = None, seed: int | None = 0,
                    low: float = 0.3, high: float = 1.0) -> SignedGraph:
    """The 12-node benchmark topology with signs fixed and magnitudes drawn.

    Magnitudes are taken from ``magnitudes`` if given (cooperative edges
    first, in the order listed above), else uniform in [low, high] from
    ``seed``.
    """
    pairs = BENCHMARK_COOPERATIVE + BENCHMARK_ANTAGONISTIC
    signs = [1.0] * len(BENCHMARK_COOPERATIVE) + [-1.0] * len(BENCHMARK_ANTAGONISTIC)
    if magnitudes is None:
        magnitudes = np.random.default_rng(seed).uniform(low, high, len(pairs))
    if len(magnitudes) != len(pairs):
        raise ValidationError(f"need {len(pairs)} magnitudes, got {len(magnitudes)}")
    edges = tuple((i, j, s * float(m)) for (i, j), s, m in zip(pairs, signs, magnitudes))
    return SignedGraph(BENCHMARK_N, edges, normalized=high <= 1.0)


def random_signed_graph(n: int, density: float, negative_fraction: float, seed: int,
                        normalized: bool = True, low: float = 0.3, high: float = 1.0,
                        max_attempts: int = 1000) -> SignedGraph:
    """Connected Erdos-Renyi style signed graph, rejection-sampled.

    Each pair is present with probability ``density``; each present edge is
    antagonistic with probability ``negative_fraction``. Magnitudes are
    uniform in [low, high] (forced into [0.3, 1] when ``normalized``).
    """
    if not (0.0 < density <= 1.0):
        raise ValidationError(f"density must be in (0, 1], got {density}")
    if not (0.0 <= negative_fraction <= 1.0):
        raise ValidationError(f"negative_fraction must be in [0, 1], got {negative_fraction}")
    if n < 1:
        raise ValidationError("need at least one node")
    if normalized:
        low, high = 0.3, 1.0
    rng = np.random.default_rng(seed)
    heads, tails = pair_arrays(n)
    for _ in range(max_attempts):
        present = rng.random(len(heads)) < density
        neg = rng.random(len(heads)) < negative_fraction
        mags = rng.uniform(low, high, len(heads))
        edges = tuple((int(i) + 1, int(j) + 1, float(-m if s else m))
                      for i, j, p, s, m in zip(heads, tails, present, neg, mags) if p)
        g = SignedGraph(n, edges, normalized=normalized)
        if g.is_connected():
            return g
    raise ValidationError(f"no connected graph with n={n}, density={density} "
                          f"after {max_attempts} attempts")
