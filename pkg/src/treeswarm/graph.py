"""Tree communication network and the spectral quantities built on it.

Vertex ids are 1-based throughout the public API (robot 1 is the informed
slave); position arrays are indexed with row ``i - 1``. Every oriented edge
uses the fixed convention lower-index = tail, so all derived matrices are
deterministic for a given edge list.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadIndex, EdgeTooLong, NonPositiveWeight, NotATree


@dataclass(frozen=True)
class TreeNetwork:
    """Validated tree over vertices {1..N} with a fixed orientation.

    edges are (tail, head) pairs with tail < head, in the order supplied to
    build_tree; neighbor_map[i] lists the initial neighbours of vertex i.
    Instances are immutable and safe to share between threads.
    """

    n_vertices: int
    edges: tuple
    neighbor_map: dict

    @property
    def n_edges(self):
        return len(self.edges)

    def neighbors(self, i):
        return self.neighbor_map[i]

    def edge_arrays(self):
        """0-based (tails, heads) index arrays, one entry per oriented edge."""
        tails = np.array([t - 1 for t, _ in self.edges], dtype=np.int64)
        heads = np.array([h - 1 for _, h in self.edges], dtype=np.int64)
        return tails, heads


@dataclass(frozen=True)
class SpectralConstants:
    """Algebraic connectivity and the largest edge-Laplacian eigenvalue."""

    lambda_L: float
    lambda_L_max: float

    def __post_init__(self):
        if not 0.0 < self.lambda_L <= self.lambda_L_max:
            raise ValueError("require 0 < lambda_L <= lambda_L_max")


def build_tree(n_vertices, edges):
    """Validate an edge list as a tree and fix the orientation.

    Raises NotATree when the edge count is not N-1 or the graph is
    disconnected/cyclic, BadIndex for vertices outside {1..N}.
    """
    n = int(n_vertices)
    if n < 2:
        raise NotATree(f"need at least 2 vertices, got {n}")
    edges = [(int(a), int(b)) for a, b in edges]
    for a, b in edges:
        if not (1 <= a <= n and 1 <= b <= n):
            raise BadIndex(f"edge ({a},{b}) references a vertex outside 1..{n}")
        if a == b:
            raise NotATree(f"self-loop at vertex {a}")
    if len(edges) != n - 1:
        raise NotATree(f"a tree on {n} vertices has {n - 1} edges, got {len(edges)}")

    oriented = tuple((min(a, b), max(a, b)) for a, b in edges)
    if len(set(oriented)) != len(oriented):
        raise NotATree("duplicate edge")

    adj = {i: [] for i in range(1, n + 1)}
    for a, b in oriented:
        adj[a].append(b)
        adj[b].append(a)

    # N-1 edges + connected <=> tree
    seen = {1}
    stack = [1]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != n:
        raise NotATree("graph is not connected")

    neighbor_map = {i: tuple(sorted(adj[i])) for i in range(1, n + 1)}
    return TreeNetwork(n_vertices=n, edges=oriented, neighbor_map=neighbor_map)


def incidence_matrix(tree):
    """N x (N-1) oriented incidence matrix: +1 at the head of each edge,
    -1 at the tail."""
    d = np.zeros((tree.n_vertices, tree.n_edges))
    for k, (tail, head) in enumerate(tree.edges):
        d[tail - 1, k] = -1.0
        d[head - 1, k] = 1.0
    return d


def unweighted_laplacian(tree):
    """Unweighted graph Laplacian (degree minus adjacency)."""
    n = tree.n_vertices
    lap = np.zeros((n, n))
    for a, b in tree.edges:
        lap[a - 1, a - 1] += 1.0
        lap[b - 1, b - 1] += 1.0
        lap[a - 1, b - 1] -= 1.0
        lap[b - 1, a - 1] -= 1.0
    return lap


def weighted_laplacian(tree, weights):
    """Laplacian with positive per-edge weights, equal to D diag(w) D^T."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (tree.n_edges,):
        raise ValueError(f"expected {tree.n_edges} weights, got shape {w.shape}")
    if np.any(w <= 0.0):
        raise NonPositiveWeight("all edge weights must be > 0")
    n = tree.n_vertices
    lap = np.zeros((n, n))
    for k, (a, b) in enumerate(tree.edges):
        lap[a - 1, a - 1] += w[k]
        lap[b - 1, b - 1] += w[k]
        lap[a - 1, b - 1] -= w[k]
        lap[b - 1, a - 1] -= w[k]
    return lap


def edge_laplacian(tree):
    """(N-1) x (N-1) edge Laplacian D^T D; positive definite for a tree."""
    d = incidence_matrix(tree)
    return d.T @ d


def algebraic_connectivity(tree):
    """Second-smallest eigenvalue of the unweighted Laplacian."""
    eigs = np.linalg.eigvalsh(unweighted_laplacian(tree))
    return float(eigs[1])


def spectral_constants(tree):
    """Bundle the connectivity eigenvalue with the largest edge-Laplacian
    eigenvalue; for a tree the edge spectrum equals the nonzero Laplacian
    spectrum, so both come from one decomposition."""
    eigs = np.linalg.eigvalsh(unweighted_laplacian(tree))
    return SpectralConstants(lambda_L=float(eigs[1]), lambda_L_max=float(eigs[-1]))


def check_gradient_energy_bound(positions, tree, params, tol=1e-9):
    """Evaluate both sides of the gradient-energy lower bound.

    lhs is the summed squared gradient field of the link potential, rhs is
    4*lambda_L*P/(r^2+Q) times the total potential. Returns (lhs, rhs, holds)
    where holds allows a relative slack of ``tol``.
    """
    from .potential import psi

    x = np.asarray(positions, dtype=float)
    tails, heads = tree.edge_arrays()
    dx = x[heads] - x[tails]
    d2 = np.einsum("ij,ij->i", dx, dx)
    r2 = params.r * params.r
    if np.any(d2 >= r2):
        raise EdgeTooLong("an edge is at or beyond the communication radius")

    den = r2 - d2 + params.Q
    w = 2.0 * params.P * (r2 + params.Q) / den**2
    theta = np.zeros_like(x)
    np.add.at(theta, tails, -w[:, None] * dx)
    np.add.at(theta, heads, w[:, None] * dx)
    lhs = float(np.sum(theta * theta))

    v_p = float(sum(psi(d, params) for d in d2))
    rhs = 4.0 * algebraic_connectivity(tree) * params.P / (r2 + params.Q) * v_p
    holds = lhs >= rhs - tol * max(1.0, rhs)
    return lhs, rhs, holds
