"""Matrix groups SO(N), U(N), SU(N) and their Lie algebras.

Conventions: group elements satisfy Q Q* = I (with det = 1 for SO/SU),
algebra elements X + X* = 0 (traceless for su(N)).  The algebra carries the
Hilbert-Schmidt inner product <X, Y> = Re Tr(X Y*), which on anti-Hermitian
matrices equals -Re Tr(XY).  All matrices are stored as complex128 numpy
arrays; SO data keeps an exactly-zero imaginary part.

The group constant c_g (defined by sum_a v_a^2 = c_g I over any orthonormal
algebra basis) and the Ito parameters (lambda, nu, mu) of the algebra
Brownian covariance

    E[dB^ij dB^kl] = (lambda d_il d_jk + nu d_ij d_kl + mu d_ik d_jl) dt

are exposed both as floats and as exact fractions:

    group      c_g            (lambda, nu, mu)
    SO(N)      -(N-1)/2       (-1/2, 0,   1/2)
    U(N)       -N             (-1,   0,   0)
    SU(N)      -(N^2-1)/N     (-1,   1/N, 0)
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from .errors import NumericalFaultError

# integer codes used by the jitted kernels
KIND_SO, KIND_U, KIND_SU = 0, 1, 2
_KIND_CODES = {"SO": KIND_SO, "U": KIND_U, "SU": KIND_SU}

# Tolerance for ||QQ* - I||_inf on group elements; configurations drifting
# past it are re-projected (polar retraction).
MANIFOLD_TOL = 1e-8


@dataclass(frozen=True)
class GroupSpec:
    """Structure group: kind in {"SO", "U", "SU"} and matrix dimension n."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown group kind {self.kind!r}; expected SO, U, or SU")
        n_min = 1 if self.kind == "U" else 2
        if self.n < n_min:
            raise ValueError(f"{self.kind}({self.n}) not supported; need N >= {n_min}")

    @property
    def kind_code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def is_real(self) -> bool:
        return self.kind == "SO"

    def __str__(self):
        return f"{self.kind}({self.n})"


def algebra_dim(g: GroupSpec) -> int:
    """Real dimension of the Lie algebra."""
    n = g.n
    if g.kind == "SO":
        return n * (n - 1) // 2
    if g.kind == "U":
        return n * n
    return n * n - 1


def group_constants_exact(g: GroupSpec):
    """(c_g, lambda, nu, mu) as exact fractions."""
    n = g.n
    if g.kind == "SO":
        return (Fraction(-(n - 1), 2), Fraction(-1, 2), Fraction(0), Fraction(1, 2))
    if g.kind == "U":
        return (Fraction(-n), Fraction(-1), Fraction(0), Fraction(0))
    return (Fraction(-(n * n - 1), n), Fraction(-1), Fraction(1, n), Fraction(0))


def group_constants(g: GroupSpec):
    """(c_g, lambda, nu, mu) as floats."""
    return tuple(float(x) for x in group_constants_exact(g))


def inner_product(x: np.ndarray, y: np.ndarray) -> float:
    """Hilbert-Schmidt inner product Re Tr(X Y*)."""
    if x.shape != y.shape or x.shape[-1] != x.shape[-2]:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.sum(x * np.conj(y)).real)


def project_to_algebra(m: np.ndarray, g: GroupSpec) -> np.ndarray:
    """Orthogonal projection of an N x N matrix onto the Lie algebra.

    SO: real anti-symmetric part; U: anti-Hermitian part; SU: anti-Hermitian
    part with the trace removed.
    """
    if m.shape != (g.n, g.n):
        raise ValueError(f"expected {(g.n, g.n)} matrix, got {m.shape}")
    m = np.asarray(m, dtype=np.complex128)
    if g.kind == "SO":
        return ((m - m.T) / 2).real.astype(np.complex128)
    x = (m - m.conj().T) / 2
    if g.kind == "SU":
        x = x - (np.trace(x) / g.n) * np.eye(g.n)
    return x


def algebra_basis(g: GroupSpec) -> np.ndarray:
    """Orthonormal basis of the algebra, shape (dim, N, N).

    so(N): (E_jk - E_kj)/sqrt2 for j < k.
    u(N):  i E_jj, plus (E_jk - E_kj)/sqrt2 and i(E_jk + E_kj)/sqrt2 for j < k.
    su(N): off-diagonal families as for u(N), diagonal family replaced by the
           traceless matrices i(E_11 + .. + E_kk - k E_k+1,k+1)/sqrt(k(k+1)).
    """
    n = g.n
    out = []
    if g.kind == "U":
        for j in range(n):
            v = np.zeros((n, n), dtype=np.complex128)
            v[j, j] = 1j
            out.append(v)
    elif g.kind == "SU":
        for k in range(1, n):
            v = np.zeros((n, n), dtype=np.complex128)
            c = 1.0 / np.sqrt(k * (k + 1))
            for j in range(k):
                v[j, j] = 1j * c
            v[k, k] = -1j * (k * c)
            out.append(v)
    for j in range(n):
        for k in range(j + 1, n):
            v = np.zeros((n, n), dtype=np.complex128)
            v[j, k] = 1 / np.sqrt(2)
            v[k, j] = -1 / np.sqrt(2)
            out.append(v)
    if g.kind in ("U", "SU"):
        for j in range(n):
            for k in range(j + 1, n):
                v = np.zeros((n, n), dtype=np.complex128)
                v[j, k] = 1j / np.sqrt(2)
                v[k, j] = 1j / np.sqrt(2)
                out.append(v)
    basis = np.array(out)
    assert basis.shape[0] == algebra_dim(g)
    return basis


def sample_algebra_gaussian(g: GroupSpec, rng: np.random.Generator, size=None) -> np.ndarray:
    """Standard Gaussian algebra element(s): E <X,v><X,w> = <v,w>.

    Equivalent to summing i.i.d. standard normal coefficients over an
    orthonormal basis; realized entrywise so the same construction runs
    inside the jitted kernels (single draws share their code path and random
    stream).  With ``size`` an int, returns a vectorized batch (size, N, N).
    """
    from . import kernels

    n = g.n
    if size is None:
        return kernels.sample_algebra(g.kind_code, n, rng)
    shape = (size, n, n)
    if g.kind == "SO":
        a = rng.standard_normal(shape)
        return ((a - np.swapaxes(a, -1, -2)) / 2).astype(np.complex128)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    x = (z - np.conj(np.swapaxes(z, -1, -2))) / 2
    if g.kind == "SU":
        tr = np.trace(x, axis1=-2, axis2=-1)
        x = x - (tr / n)[..., None, None] * np.eye(n)
    return x


def group_exp(x: np.ndarray, g: GroupSpec | None = None) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring with Pade core via scipy).

    For algebra input the result lies on the group; a defect beyond
    MANIFOLD_TOL signals a numerical fault.
    """
    q = expm(np.asarray(x, dtype=np.complex128))
    if not np.all(np.isfinite(q)):
        raise NumericalFaultError("matrix exponential did not converge")
    if g is not None and unitarity_defect(q) > MANIFOLD_TOL:
        raise NumericalFaultError(
            f"exponential left the manifold: defect {unitarity_defect(q):.3e}"
        )
    if g is not None and g.is_real:
        q = q.real.astype(np.complex128)
    return q


def haar_sample(g: GroupSpec, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed group element via QR of a Ginibre matrix.

    The R-diagonal phases are absorbed into Q to make the distribution
    exactly invariant; SO/SU get a determinant correction afterwards.
    """
    n = g.n
    if g.kind == "SO":
        a = rng.standard_normal((n, n))
        q, r = np.linalg.qr(a)
        d = np.diagonal(r)
        q = q * np.where(d >= 0, 1.0, -1.0)
        if np.linalg.det(q) < 0:
            q = q.copy()
            q[0, :] = -q[0, :]
        return q.astype(np.complex128)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    if g.kind == "SU":
        det = np.linalg.det(q)
        q = q * np.exp(-1j * np.angle(det) / n)
    return q


def project_to_group(m: np.ndarray, g: GroupSpec) -> np.ndarray:
    """Polar retraction: nearest group element to a near-group matrix."""
    u, _, vh = np.linalg.svd(m)
    q = u @ vh
    if g.kind == "SO":
        if np.linalg.det(q).real < 0:
            u = u.copy()
            u[:, -1] = -u[:, -1]
            q = u @ vh
        q = q.real.astype(np.complex128)
    elif g.kind == "SU":
        det = np.linalg.det(q)
        q = q * np.exp(-1j * np.angle(det) / g.n)
    return q


def unitarity_defect(q: np.ndarray) -> float:
    """max-norm of Q Q* - I."""
    n = q.shape[-1]
    return float(np.max(np.abs(q @ np.conj(q.T) - np.eye(n))))


def check_group_element(q: np.ndarray, g: GroupSpec, tol: float = MANIFOLD_TOL) -> None:
    """Raise NumericalFaultError unless Q satisfies the group invariants."""
    if unitarity_defect(q) > tol:
        raise NumericalFaultError(f"unitarity defect {unitarity_defect(q):.3e} > {tol}")
    det = np.linalg.det(q)
    if g.kind == "U":
        bad = abs(abs(det) - 1) > tol
    else:
        bad = abs(det - 1) > tol
    if bad:
        raise NumericalFaultError(f"determinant {det} violates {g} invariant")
