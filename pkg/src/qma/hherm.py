"""Hyperhermitian matrix analysis.

A hyperhermitian matrix satisfies a_ij = conj(a_ji), so its diagonal is
real and its realization is a real symmetric 4n x 4n matrix.  Everything
here rides on that realization: eigenvalues of the realization come in
exact quadruples (each quaternionic eigenspace is a right module, hence
4-real-dimensional per quaternionic dimension), and the signed product of
one representative per quadruple is the Moore determinant.

Provides
--------
HyperHermitian        value type wrapping an (n, n, 4) component array
eig                   full eigendecomposition with quaternionic eigenvectors
moore_det             signed determinant (closed forms for n <= 2)
mixed_det             polarization of the determinant in n slots
cholesky              A = T* T with T upper triangular, real positive diagonal
simdiag               simultaneous diagonalization A = T* T, B = T* D T
rank_one_decomp       A = sum_k beta_k zeta_k (x) zeta_k*, spectrum-bounded
random_hyperhermitian test-data helper
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from itertools import combinations

import numpy as np

from .quat_core import (
    QuatMatrix,
    qconj,
    qmat_adjoint,
    qmat_mul,
    qmul,
    realize,
)

__all__ = [
    "HyperHermitian",
    "EigenDecomposition",
    "RankOneDecomposition",
    "eig",
    "moore_det",
    "mixed_det",
    "cholesky",
    "simdiag",
    "rank_one_decomp",
    "random_hyperhermitian",
    "re_trace",
]


def _symmetrize(comp):
    return 0.5 * (comp + qconj(np.swapaxes(comp, -3, -2)))


class HyperHermitian:
    """Immutable n x n hyperhermitian matrix.

    Stored as an (n, n, 4) float array with the symmetry a_ij = conj(a_ji)
    holding exactly (enforced bitwise at construction after a defect check).
    """

    __slots__ = ("_comp",)

    def __init__(self, components):
        comp = np.array(components, dtype=float)
        if comp.ndim != 3 or comp.shape[0] != comp.shape[1] or comp.shape[2] != 4:
            raise ValueError(f"expected (n, n, 4) components, got {comp.shape}")
        defect = np.abs(comp - qconj(np.swapaxes(comp, 0, 1))).max()
        scale = max(np.abs(comp).max(), 1.0)
        if defect > 1e-10 * scale:
            raise ValueError(f"matrix is not hyperhermitian: defect {defect:.3e}")
        comp = _symmetrize(comp)
        comp.flags.writeable = False
        self._comp = comp

    @classmethod
    def from_components(cls, components):
        return cls(components)

    @classmethod
    def from_parts(cls, diagonal, upper):
        """Build from n real diagonal entries and the strict upper triangle.

        `upper` lists the entries (i, j) with i < j in lexicographic order,
        each a length-4 quaternion.
        """
        diagonal = np.asarray(diagonal, dtype=float)
        n = diagonal.shape[0]
        upper = np.asarray(upper, dtype=float).reshape(-1, 4)
        if upper.shape[0] != n * (n - 1) // 2:
            raise ValueError(
                f"need {n * (n - 1) // 2} upper entries for n={n}, got {upper.shape[0]}"
            )
        comp = np.zeros((n, n, 4))
        comp[np.arange(n), np.arange(n), 0] = diagonal
        k = 0
        for i in range(n):
            for j in range(i + 1, n):
                comp[i, j] = upper[k]
                comp[j, i] = qconj(upper[k])
                k += 1
        return cls(comp)

    @classmethod
    def from_diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        comp = np.zeros((n, n, 4))
        comp[np.arange(n), np.arange(n), 0] = values
        return cls(comp)

    @classmethod
    def identity(cls, n):
        return cls.from_diagonal(np.ones(n))

    @property
    def n(self):
        return self._comp.shape[0]

    @property
    def components(self):
        return self._comp

    @property
    def diagonal(self):
        return self._comp[np.arange(self.n), np.arange(self.n), 0].copy()

    @property
    def upper(self):
        n = self.n
        out = np.empty((n * (n - 1) // 2, 4))
        k = 0
        for i in range(n):
            for j in range(i + 1, n):
                out[k] = self._comp[i, j]
                k += 1
        return out

    def as_quatmatrix(self):
        return QuatMatrix(self._comp)

    def __add__(self, other):
        return HyperHermitian(self._comp + other.components)

    def __sub__(self, other):
        return HyperHermitian(self._comp - other.components)

    def __rmul__(self, c):
        return HyperHermitian(float(c) * self._comp)

    def __repr__(self):
        return f"HyperHermitian(n={self.n})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ascending; eigenvector k is column k of `eigenvectors`."""

    eigenvalues: np.ndarray
    eigenvectors: QuatMatrix

    @property
    def min_eigenvalue(self):
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class RankOneDecomposition:
    vectors: list
    weights: np.ndarray
    lambda_star: float
    Lambda_star: float


def _qvec_dot(x, y):
    # sum_i conj(x_i) y_i for (n, 4) vectors
    return qmul(qconj(x), y).sum(axis=0)


def eig(A, tol=1e-8):
    """Eigendecomposition of a hyperhermitian matrix.

    Diagonalizes the real symmetric realization, keeps one eigenvalue per
    exact quadruple, and extracts quaternionic eigenvectors by reinterpreting
    realization eigenvectors and Gram-Schmidt over the quaternions inside
    each near-degenerate cluster.  Clusters within tol*scale are treated as
    a single eigenspace so degenerate spectra stay orthonormal.
    """
    comp = A.components if isinstance(A, HyperHermitian) else np.asarray(A, dtype=float)
    n = comp.shape[0]
    R = realize(comp)
    scale = max(np.abs(R).max(), 1.0)
    w, V = np.linalg.eigh(R)
    vecs = np.zeros((n, n, 4))
    kout = 0
    idx = 0
    while idx < 4 * n:
        jdx = idx
        while jdx < 4 * n and w[jdx] - w[idx] <= tol * scale:
            jdx += 1
        kept = []
        for col in range(idx, jdx):
            v = V[:, col].reshape(n, 4).copy()
            for u in kept:
                v = v - qmul(u, _qvec_dot(u, v))
            nv = np.sqrt((v * v).sum())
            if nv > 1e-6:
                kept.append(v / nv)
        for v in kept:
            if kout >= n:
                raise RuntimeError(
                    f"eigenvector extraction produced more than n={n} vectors; "
                    f"cluster tolerance {tol} too coarse"
                )
            vecs[:, kout, :] = v
            kout += 1
        idx = jdx
    if kout != n:
        raise RuntimeError(
            f"eigenvector extraction found {kout} of {n} vectors; "
            f"cluster tolerance {tol} unsuitable for this spectrum"
        )
    return EigenDecomposition(eigenvalues=w[::4].copy(), eigenvectors=QuatMatrix(vecs))


def moore_det(A, method="auto"):
    """Signed determinant of a hyperhermitian matrix.

    method: "auto" uses closed forms for n <= 2 and the eigenvalue route
    otherwise; "closed" forces the n <= 2 formulas; "eig" forces the
    eigenvalue product.  The two routes agree within 1e-10 relative.
    """
    comp = A.components if isinstance(A, HyperHermitian) else np.asarray(A, dtype=float)
    n = comp.shape[0]
    if method == "auto":
        method = "closed" if n <= 2 else "eig"
    if method == "closed":
        if n == 1:
            return float(comp[0, 0, 0])
        if n == 2:
            a = comp[0, 0, 0]
            b = comp[1, 1, 0]
            q = comp[0, 1]
            return float(a * b - (q * q).sum())
        raise ValueError(f"closed-form determinant only available for n <= 2, got n={n}")
    if method == "eig":
        w = np.linalg.eigvalsh(realize(comp))
        return float(np.prod(w[::4]))
    raise ValueError(f"unknown method {method!r}")


def mixed_det(*matrices):
    """Mixed determinant of n hyperhermitian n x n matrices.

    Polarization by inclusion-exclusion:
        (1/n!) * sum over nonempty S of (-1)^(n-|S|) moore_det(sum_{i in S} A_i)
    Symmetric and real-linear in each slot; equals moore_det when all
    arguments coincide.
    """
    comps = [
        m.components if isinstance(m, HyperHermitian) else np.asarray(m, dtype=float)
        for m in matrices
    ]
    n = comps[0].shape[0]
    if len(comps) != n:
        raise ValueError(f"need exactly n={n} matrices, got {len(comps)}")
    for c in comps:
        if c.shape != comps[0].shape:
            raise ValueError(f"dimension mismatch: {c.shape} vs {comps[0].shape}")
    total = 0.0
    for size in range(1, n + 1):
        sign = (-1.0) ** (n - size)
        for subset in combinations(range(n), size):
            acc = comps[subset[0]].copy()
            for i in subset[1:]:
                acc += comps[i]
            total += sign * moore_det(HyperHermitian(acc))
    return total / factorial(n)


def cholesky(A):
    """Factor a positive definite hyperhermitian A as T* T.

    T is upper triangular with real positive diagonal.  Raises ValueError
    ("not positive definite") on a non-positive pivot.
    """
    comp = A.components if isinstance(A, HyperHermitian) else np.asarray(A, dtype=float)
    n = comp.shape[0]
    T = np.zeros_like(comp)
    for j in range(n):
        s = comp[j, j, 0] - sum((T[k, j] ** 2).sum() for k in range(j))
        if s <= 0:
            raise ValueError(f"not positive definite: pivot {j} is {s:.6g}")
        T[j, j, 0] = np.sqrt(s)
        for m in range(j + 1, n):
            acc = comp[j, m].copy()
            for k in range(j):
                acc -= qmul(qconj(T[k, j]), T[k, m])
            T[j, m] = acc / T[j, j, 0]
    return QuatMatrix(T)


def _qmat_inv_tri(T):
    # invert upper triangular quaternionic matrix by back substitution
    n = T.shape[0]
    inv = np.zeros_like(T)
    for j in range(n):
        e = np.zeros((n, 4))
        e[j, 0] = 1.0
        for i in range(j, -1, -1):
            acc = e[i].copy()
            for k in range(i + 1, j + 1):
                acc -= qmul(T[i, k], inv[k, j])
            inv[i, j] = acc / T[i, i, 0]
    return inv


def simdiag(A, B):
    """Simultaneously diagonalize positive A and hyperhermitian B.

    Returns (T, D) with A = T* T and B = T* diag(D) T.  Factor A = T1* T1,
    transform Bt = T1^-* B T1^-1, diagonalize Bt with orthonormal columns Xi,
    and set T = Xi* T1; D holds the eigenvalues of Bt ascending.
    """
    T1 = cholesky(A).components
    T1inv = _qmat_inv_tri(T1)
    Bcomp = B.components if isinstance(B, HyperHermitian) else np.asarray(B, dtype=float)
    Bt = qmat_mul(qmat_adjoint(T1inv), qmat_mul(Bcomp, T1inv))
    Bt = _symmetrize(Bt)
    dec = eig(HyperHermitian(Bt))
    T = qmat_mul(qmat_adjoint(dec.eigenvectors.components), T1)
    return QuatMatrix(T), dec.eigenvalues.copy()


def rank_one_decomp(A, lambda_star, Lambda_star):
    """Write A as a weighted sum of rank-one projectors zeta (x) zeta*.

    Vectors are the unit eigenvectors of A, weights the eigenvalues; every
    weight must lie in [lambda_star, Lambda_star] or a ValueError names the
    offending eigenvalue.  Exact zero weights are dropped.
    """
    dec = eig(A)
    lo = float(lambda_star)
    hi = float(Lambda_star)
    tol = 1e-10 * (1.0 + max(abs(lo), abs(hi)))
    vectors = []
    weights = []
    Xi = dec.eigenvectors.components
    for k, lam in enumerate(dec.eigenvalues):
        if lam < lo - tol or lam > hi + tol:
            raise ValueError(
                f"eigenvalue {lam:.12g} outside [{lo:.6g}, {hi:.6g}]"
            )
        if lam == 0.0:
            continue
        vectors.append(Xi[:, k, :].copy())
        weights.append(float(lam))
    return RankOneDecomposition(
        vectors=vectors,
        weights=np.asarray(weights),
        lambda_star=lo,
        Lambda_star=hi,
    )


def re_trace(comp):
    """Real part of the trace of an (..., n, n, 4) quaternionic matrix stack."""
    comp = np.asarray(comp)
    n = comp.shape[-2]
    return comp[..., np.arange(n), np.arange(n), 0].sum(axis=-1)


def random_hyperhermitian(rng, n, scale=1.0):
    raw = rng.normal(size=(n, n, 4)) * scale
    return HyperHermitian(_symmetrize(raw))
