"""Hot numeric kernels: sweeps, SDE steps, and Wilson-loop measurement.

Every function here is written as plain numpy and compiled with numba unless
``YMLOOPS_NUMBA=0`` (see :mod:`ymloops.backend`).  Both paths consume the
same random streams and call the same LAPACK routines; see the backend
module for the exact determinism contract.

Data layout: a gauge configuration is a complex128 array ``q`` of shape
(n_edges, N, N) indexed by positive edge id; a directed edge is a signed
1-based code (negative means the conjugate transpose is used); loop and
plaquette paths are int32 code arrays.  Group kinds are the integer codes
from :mod:`ymloops.groups` (SO=0, U=1, SU=2).

Matrix products are written as explicit loops: for the 2x2 and 3x3 matrices
that dominate here this beats the BLAS-call overhead several-fold, and the
Metropolis accept step uses the staple form Tr((Q' - Q) staple) so each
touched plaquette costs three small multiplies instead of eight.
"""

import numpy as np

from .backend import maybe_njit

# re-projection threshold for ||QQ* - I||_inf after an SDE step
_REPROJECT_TOL = 1e-8


@maybe_njit
def _mm(a, b):
    """a @ b for small complex square matrices."""
    n = a.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            acc = 0.0 + 0.0j
            for k in range(n):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


@maybe_njit
def _mm_edge(a, q, code):
    """a @ Q_code where reversed codes use the conjugate transpose in place."""
    eid = abs(code) - 1
    m = q[eid]
    n = a.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    if code > 0:
        for i in range(n):
            for j in range(n):
                acc = 0.0 + 0.0j
                for k in range(n):
                    acc += a[i, k] * m[k, j]
                out[i, j] = acc
    else:
        for i in range(n):
            for j in range(n):
                acc = 0.0 + 0.0j
                for k in range(n):
                    acc += a[i, k] * np.conj(m[j, k])
                out[i, j] = acc
    return out


@maybe_njit
def _tr_mm(a, b):
    """Tr(a @ b) without forming the product."""
    n = a.shape[0]
    acc = 0.0 + 0.0j
    for i in range(n):
        for k in range(n):
            acc += a[i, k] * b[k, i]
    return acc


@maybe_njit
def _dagger(a):
    n = a.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[i, j] = np.conj(a[j, i])
    return out


@maybe_njit
def expm_antihermitian(x):
    """exp(X) for anti-Hermitian X via unitary eigendecomposition (exact on the group)."""
    h = -1j * x
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ np.conj(v.T)


@maybe_njit
def sample_algebra(kind, n, rng):
    """Standard Gaussian Lie algebra element, complex128 (n, n)."""
    if kind == 0:  # SO: real anti-symmetric
        a = rng.standard_normal((n, n))
        return ((a - a.T) / 2).astype(np.complex128)
    zr = rng.standard_normal((n, n))
    zi = rng.standard_normal((n, n))
    z = zr + 1j * zi
    x = (z - np.conj(z.T)) / 2
    if kind == 2:  # SU: remove the trace
        t = np.trace(x) / n
        for i in range(n):
            x[i, i] -= t
    return x


@maybe_njit
def path_product(q, codes):
    """Ordered product of edge matrices along a path of signed codes."""
    n = q.shape[1]
    acc = np.eye(n, dtype=np.complex128)
    for k in range(len(codes)):
        acc = _mm_edge(acc, q, codes[k])
    return acc


@maybe_njit
def path_trace(q, codes):
    n = q.shape[1]
    acc = path_product(q, codes)
    t = 0.0 + 0.0j
    for i in range(n):
        t += acc[i, i]
    return t


@maybe_njit
def action_total(q, nbeta, plaq_pos):
    """N beta Re sum over canonical plaquettes of Tr(Q_p)."""
    s = 0.0
    for p in range(plaq_pos.shape[0]):
        s += path_trace(q, plaq_pos[p]).real
    return nbeta * s


@maybe_njit
def _staple(q, path, eid):
    """(product after the marked edge) @ (product before it), and its sign.

    For a plaquette path containing positive edge eid once at position k with
    orientation sigma, Tr(Q_p) = Tr(Q_eid^sigma @ staple).
    """
    n = q.shape[1]
    k = 0
    sigma = 1
    for t in range(4):
        if abs(path[t]) - 1 == eid:
            k = t
            sigma = 1 if path[t] > 0 else -1
            break
    acc = np.eye(n, dtype=np.complex128)
    for t in range(k + 1, 4):
        acc = _mm_edge(acc, q, path[t])
    for t in range(k):
        acc = _mm_edge(acc, q, path[t])
    return acc, sigma


@maybe_njit
def metropolis_sweep(q, eps, nbeta, kind, plaq_pos, edge_plaq_off, edge_plaq_ids, rng):
    """One fixed-order sweep of symmetric random-walk proposals; returns accept count.

    Proposal Q' = exp(eps xi) Q with xi a standard algebra Gaussian; the local
    action difference only involves the canonical plaquettes containing the
    edge.  Acceptance probability min(1, exp(dS)) targets exp(+S) exactly.
    """
    n_edges = q.shape[0]
    n = q.shape[1]
    accepted = 0
    for eid in range(n_edges):
        xi = sample_algebra(kind, n, rng)
        step = expm_antihermitian(eps * xi)
        if kind == 0:
            step = step.real.astype(np.complex128)
        prop = _mm(step, q[eid])
        diff_pos = prop - q[eid]
        diff_neg = _dagger(diff_pos)
        ds = 0.0
        for t in range(edge_plaq_off[eid], edge_plaq_off[eid + 1]):
            path = plaq_pos[edge_plaq_ids[t]]
            staple, sigma = _staple(q, path, eid)
            if sigma > 0:
                ds += _tr_mm(diff_pos, staple).real
            else:
                ds += _tr_mm(diff_neg, staple).real
        ds *= nbeta
        u = rng.random()
        if ds >= 0.0 or u < np.exp(ds):
            q[eid] = prop
            accepted += 1
    return accepted


@maybe_njit
def _polar_retract(m, kind, n):
    """Nearest group element to a near-group matrix (polar factor + phase fix)."""
    h = np.conj(m.T) @ m
    w, v = np.linalg.eigh(h)
    inv_sqrt = (v * (1.0 / np.sqrt(np.abs(w)))) @ np.conj(v.T)
    u = _mm(m, inv_sqrt)
    if kind == 2:
        det = np.linalg.det(u)
        u = u * np.exp(-1j * np.angle(det) / n)
    if kind == 0:
        u = u.real.astype(np.complex128)
    return u


@maybe_njit
def unitarity_defect_max(q):
    n = q.shape[1]
    worst = 0.0
    for e in range(q.shape[0]):
        m = _mm(q[e], _dagger(q[e]))
        for i in range(n):
            m[i, i] -= 1.0
        d = np.max(np.abs(m))
        if d > worst:
            worst = d
    return worst


@maybe_njit
def drift_matrix(q, eid, nbeta, kind, pt_off, pt_paths):
    """Algebra-valued drift A_e: exp(dt A_e) Q_e follows the action gradient flow.

    A_e = -(N beta / 4) sum over rooted plaquettes p starting at e of
    (Q_p - Q_p*), with the trace removed inside the sum for SU.
    """
    n = q.shape[1]
    acc = np.zeros((n, n), dtype=np.complex128)
    row = 2 * eid  # positive orientation
    for t in range(pt_off[row], pt_off[row + 1]):
        qp = path_product(q, pt_paths[t])
        g = qp - _dagger(qp)
        if kind == 2:
            tr = np.trace(g) / n
            for i in range(n):
                g[i, i] -= tr
        acc += g
    return (-0.25 * nbeta) * acc


@maybe_njit
def langevin_step(q, h, nbeta, kind, pt_off, pt_paths, rng):
    """One geodesic Euler step of the Langevin dynamic; returns max defect seen.

    All drifts are evaluated on the pre-step configuration, then every edge is
    moved by exp(sqrt(h) xi + h A_e).  The exponential realizes the
    Stratonovich group increment, so no explicit c_g counterterm appears.
    Edges whose unitarity defect exceeds the tolerance are re-projected.
    """
    n_edges = q.shape[0]
    n = q.shape[1]
    drifts = np.empty((n_edges, n, n), dtype=np.complex128)
    for eid in range(n_edges):
        drifts[eid] = drift_matrix(q, eid, nbeta, kind, pt_off, pt_paths)
    sqh = np.sqrt(h)
    worst = 0.0
    for eid in range(n_edges):
        xi = sample_algebra(kind, n, rng)
        step = expm_antihermitian(sqh * xi + h * drifts[eid])
        if kind == 0:
            step = step.real.astype(np.complex128)
        qe = _mm(step, q[eid])
        m = _mm(qe, _dagger(qe))
        for i in range(n):
            m[i, i] -= 1.0
        d = np.max(np.abs(m))
        if d > worst:
            worst = d
        if d > _REPROJECT_TOL:
            qe = _polar_retract(qe, kind, n)
        q[eid] = qe
    return worst


@maybe_njit
def measure_traces(q, loops_flat, loop_off, out):
    """Write Tr of each loop product into out (complex128, n_loops)."""
    for k in range(loop_off.shape[0] - 1):
        out[k] = path_trace(q, loops_flat[loop_off[k]:loop_off[k + 1]])
