"""Exact U(1) loop expectations on tiny lattices by quadrature.

For U(1) every edge matrix is a phase e^{i theta_e}, so expectations reduce
to integrals over the free edge angles after gauge fixing: angles on a
spanning tree of the vertex graph are set to 0, which leaves every
gauge-invariant expectation unchanged.  The remaining integral is evaluated
with a tensor-product periodic trapezoidal rule (spectrally accurate on the
circle), chunked so memory stays bounded.

Used as ground truth for the samplers: on a single-plaquette lattice the
plaquette expectation also has the Bessel closed form I_1(beta)/I_0(beta),
which serves as an independent cross-check of the quadrature.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import iv

from .errors import ConfigError
from .lattice import Lattice
from .loops import LoopSequence, lengths_and_windings

__all__ = ["QuadratureSpec", "gauge_fix", "exact_phi_u1", "bessel_ratio"]

MAX_FREE_EDGES = 8
_CHUNK = 1 << 18


@dataclass(frozen=True)
class QuadratureSpec:
    """Grid resolution per free edge plus the gauge-fixed spanning tree."""

    n_points: int
    gauge_tree: frozenset

    def __post_init__(self):
        if self.n_points < 8:
            raise ValueError("need at least 8 quadrature points per edge")


def gauge_fix(lat: Lattice, n_points: int = 32, root: int = 0,
              order: str = "bfs") -> QuadratureSpec:
    """Deterministic spanning tree (BFS or DFS) from a chosen root vertex."""
    adj = [[] for _ in range(lat.n_vertices)]
    for eid in range(lat.n_edges):
        u, v = lat.edge_endpoints(eid + 1)
        adj[u].append((v, eid))
        adj[v].append((u, eid))
    seen = [False] * lat.n_vertices
    seen[root] = True
    frontier = [root]
    tree = []
    while frontier:
        u = frontier.pop(0 if order == "bfs" else -1)
        for v, eid in adj[u]:
            if not seen[v]:
                seen[v] = True
                tree.append(eid)
                frontier.append(v)
    if not all(seen):
        raise ConfigError("lattice vertex graph is disconnected")
    return QuadratureSpec(n_points, frozenset(tree))


def _validate_tree(lat: Lattice, tree) -> None:
    if len(tree) != lat.n_vertices - 1:
        raise ConfigError("gauge tree is not spanning: wrong edge count")
    parent = list(range(lat.n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for eid in tree:
        u, v = lat.edge_endpoints(eid + 1)
        ru, rv = find(u), find(v)
        if ru == rv:
            raise ConfigError("gauge tree contains a cycle")
        parent[ru] = rv


def exact_phi_u1(lat: Lattice, beta: float, s: LoopSequence,
                 spec: QuadratureSpec | None = None) -> complex:
    """phi(s) for U(1): quadrature of W_s exp(beta sum_p cos theta_p), normalized.

    Tree edges are pinned to angle 0; the free-edge count must stay within
    MAX_FREE_EDGES (the grid is n_points^free).
    """
    if spec is None:
        spec = gauge_fix(lat)
    _validate_tree(lat, spec.gauge_tree)
    free = [eid for eid in range(lat.n_edges) if eid not in spec.gauge_tree]
    if len(free) > MAX_FREE_EDGES:
        raise ConfigError(
            f"{len(free)} free edges exceed the budget of {MAX_FREE_EDGES}")
    free_idx = {eid: k for k, eid in enumerate(free)}

    # integer angle coefficients of each canonical plaquette and of W_s
    plaq_coeff = np.zeros((lat.n_plaq_pos, len(free)), dtype=np.int64)
    for p, path in enumerate(lat.plaq_pos):
        for code in path:
            k = free_idx.get(abs(int(code)) - 1)
            if k is not None:
                plaq_coeff[p, k] += 1 if code > 0 else -1
    _, table, _ = lengths_and_windings(s)
    loop_coeff = np.zeros(len(free), dtype=np.int64)
    for eid, per_loop in table.items():
        k = free_idx.get(eid)
        if k is not None:
            loop_coeff[k] = sum(per_loop)

    npts = spec.n_points
    step = 2 * np.pi / npts
    total = npts ** len(free)
    radix = npts ** np.arange(len(free) - 1, -1, -1, dtype=np.int64)
    num = 0.0 + 0.0j
    den = 0.0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        angles = ((idx[:, None] // radix) % npts) * step
        theta_p = angles @ plaq_coeff.T
        weight = np.exp(beta * np.cos(theta_p).sum(axis=1))
        num += complex((np.exp(1j * (angles @ loop_coeff)) * weight).sum())
        den += float(weight.sum())
    return num / den


def bessel_ratio(beta: float, order: int = 1) -> float:
    """I_order(beta)/I_0(beta): single-plaquette closed form, independent of the grid."""
    return float(iv(order, beta) / iv(0, beta))
