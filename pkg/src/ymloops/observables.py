"""Gauge configurations, the plaquette action, its gradient, and Wilson loops.

The action is S(Q) = N beta Re sum_{p in P+} Tr(Q_p), with Q_p the ordered
product of edge matrices along the canonical plaquette path (conjugate
transpose for reversed edges).  The Gibbs weight of the target measure is
exp(S(Q)) against product Haar.

The gradient convention: grad_action returns the half-gradient (the SDE
drift term), explicitly

    (1/2) grad S(Q)_e = -(N beta / 4) sum_{p starting at e} (Q_p - Q_p*) Q_e

with the trace part of (Q_p - Q_p*) removed inside the sum for SU(N).
Right-translating by Q_e^{-1} lands in the Lie algebra.
"""

import numpy as np

from . import kernels
from .errors import NumericalFaultError
from .groups import GroupSpec, MANIFOLD_TOL, haar_sample, unitarity_defect
from .lattice import Lattice, plaquettes_through
from .loops import Loop, LoopSequence

__all__ = [
    "Configuration",
    "plaquette_matrix",
    "action",
    "grad_action",
    "drift_algebra",
    "wilson_loop",
    "wilson_sequence",
    "gauge_transform",
]


class Configuration:
    """Assignment of a group matrix to every positive edge."""

    def __init__(self, lat: Lattice, group: GroupSpec, matrices: np.ndarray):
        if matrices.shape != (lat.n_edges, group.n, group.n):
            raise ValueError(
                f"expected {(lat.n_edges, group.n, group.n)} array, got {matrices.shape}"
            )
        self.lattice = lat
        self.group = group
        self.q = np.ascontiguousarray(matrices, dtype=np.complex128)

    @classmethod
    def identity(cls, lat: Lattice, group: GroupSpec):
        q = np.broadcast_to(np.eye(group.n, dtype=np.complex128),
                            (lat.n_edges, group.n, group.n)).copy()
        return cls(lat, group, q)

    @classmethod
    def haar(cls, lat: Lattice, group: GroupSpec, rng: np.random.Generator):
        q = np.stack([haar_sample(group, rng) for _ in range(lat.n_edges)])
        return cls(lat, group, q)

    def copy(self):
        return Configuration(self.lattice, self.group, self.q.copy())

    def edge_matrix(self, code: int) -> np.ndarray:
        """Matrix of a directed edge; reversal is the conjugate transpose."""
        m = self.q[abs(code) - 1]
        return m if code > 0 else m.conj().T

    def check_manifold(self, tol: float = MANIFOLD_TOL):
        worst = kernels.unitarity_defect_max(self.q)
        if worst > tol:
            raise NumericalFaultError(f"configuration defect {worst:.3e} > {tol}")
        return worst


def plaquette_matrix(config: Configuration, path) -> np.ndarray:
    """Ordered product of the four edge matrices of a plaquette path."""
    return kernels.path_product(config.q, np.asarray(path, dtype=np.int32))


def action(config: Configuration, beta: float) -> float:
    """N beta Re sum over canonical plaquettes of Tr(Q_p)."""
    return float(kernels.action_total(
        config.q, config.group.n * beta, config.lattice.plaq_pos))


def grad_action(config: Configuration, code: int, beta: float) -> np.ndarray:
    """Half action gradient (1/2) grad S(Q)_e for a directed edge, as a matrix."""
    lat, g = config.lattice, config.group
    n = g.n
    acc = np.zeros((n, n), dtype=np.complex128)
    for p in plaquettes_through(lat, code):
        qp = kernels.path_product(config.q, np.asarray(p, dtype=np.int32))
        diff = qp - qp.conj().T
        if g.kind == "SU":
            diff -= (np.trace(diff) / n) * np.eye(n)
        acc += diff
    return (-0.25 * n * beta) * (acc @ config.edge_matrix(code))


def drift_algebra(config: Configuration, eid: int, beta: float) -> np.ndarray:
    """Algebra-valued drift A_e = (1/2) grad S(Q)_e Q_e^{-1} for a positive edge."""
    lat, g = config.lattice, config.group
    return kernels.drift_matrix(
        config.q, eid, g.n * beta, g.kind_code,
        lat.plaq_through_offsets, lat.plaq_through_paths)


def wilson_loop(config: Configuration, l: Loop) -> complex:
    """Trace of the ordered edge-matrix product along the loop."""
    return complex(kernels.path_trace(config.q, np.asarray(l.edges, dtype=np.int32)))


def wilson_sequence(config: Configuration, s: LoopSequence) -> complex:
    """Product of the loop traces over the minimal representation (empty -> 1)."""
    w = 1.0 + 0.0j
    for l in s.loops:
        w *= wilson_loop(config, l)
    return w


def gauge_transform(config: Configuration, site_elems: np.ndarray) -> Configuration:
    """Q_e -> g_{u(e)} Q_e g_{v(e)}^{-1} for a map from vertices to the group."""
    lat = config.lattice
    q = np.empty_like(config.q)
    for eid in range(lat.n_edges):
        u, v = lat.edge_endpoints(eid + 1)
        q[eid] = site_elems[u] @ config.q[eid] @ site_elems[v].conj().T
    return Configuration(lat, config.group, q)
