"""Quaternion and quaternionic-matrix kernel.

Quaternions are stored as length-4 real vectors (w, x, y, z) along the
last axis of a numpy array, so every kernel function here is batched:
``qmul`` multiplies arrays of quaternions, ``qmat_mul`` multiplies
arrays of quaternionic matrices stored as ``(..., n, n, 4)``.

Vectors over the quaternions form a right module (scalars act on the
right); matrices act on the left.  The realization of an n x n matrix
is the real 4n x 4n matrix of that left action in the basis ordering
real-axis index ``s = 4*i + p`` for component p of quaternionic
coordinate i.  All floating point is 64-bit.
"""

import numpy as np

__all__ = [
    "UNIT_PRODUCTS",
    "Quaternion",
    "QuatMatrix",
    "congruence",
    "qconj",
    "qmat_adjoint",
    "qmat_inv",
    "qmat_mul",
    "qmul",
    "qnorm",
    "quat_mul",
    "realize",
]

# UNIT_PRODUCTS[c, r, p]: coefficient of unit e_p in the product e_c * e_r,
# with (e_0, e_1, e_2, e_3) = (1, i, j, k).  Encodes ij = -ji = k,
# jk = -kj = i, ki = -ik = j and i^2 = j^2 = k^2 = -1.
UNIT_PRODUCTS = np.zeros((4, 4, 4))
UNIT_PRODUCTS[0, 0, 0] = 1
UNIT_PRODUCTS[0, 1, 1] = 1
UNIT_PRODUCTS[0, 2, 2] = 1
UNIT_PRODUCTS[0, 3, 3] = 1
UNIT_PRODUCTS[1, 0, 1] = 1
UNIT_PRODUCTS[1, 1, 0] = -1
UNIT_PRODUCTS[1, 2, 3] = 1
UNIT_PRODUCTS[1, 3, 2] = -1
UNIT_PRODUCTS[2, 0, 2] = 1
UNIT_PRODUCTS[2, 1, 3] = -1
UNIT_PRODUCTS[2, 2, 0] = -1
UNIT_PRODUCTS[2, 3, 1] = 1
UNIT_PRODUCTS[3, 0, 3] = 1
UNIT_PRODUCTS[3, 1, 2] = 1
UNIT_PRODUCTS[3, 2, 1] = -1
UNIT_PRODUCTS[3, 3, 0] = -1
UNIT_PRODUCTS.setflags(write=False)

# LEFT_ACTION[p, r, c] = UNIT_PRODUCTS[c, r, p] is the (p, r) entry of the
# real 4x4 matrix of left multiplication by e_c.
LEFT_ACTION = np.ascontiguousarray(np.transpose(UNIT_PRODUCTS, (2, 1, 0)))
LEFT_ACTION.setflags(write=False)


def qmul(a, b):
    """Quaternion product of two ``(..., 4)`` component arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.einsum("...c,...r,crp->...p", a, b, UNIT_PRODUCTS)


def qconj(a):
    """Quaternion conjugate: negate the three imaginary components."""
    out = np.array(a, dtype=float, copy=True)
    out[..., 1:] *= -1
    return out


def qnorm(a):
    """Euclidean norm of each quaternion in an ``(..., 4)`` array."""
    a = np.asarray(a, dtype=float)
    return np.sqrt((a * a).sum(axis=-1))


def qmat_mul(A, B):
    """Product of quaternionic matrices stored as ``(..., n, m, 4)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[-2] != B.shape[-3]:
        raise ValueError(
            f"inner dimensions differ: {A.shape[-2]} vs {B.shape[-3]}"
        )
    return np.einsum("...ilp,...ljr,prs->...ijs", A, B, UNIT_PRODUCTS)


def qmat_adjoint(A):
    """Conjugate transpose: (A*)_ij = conj(A_ji)."""
    return qconj(np.swapaxes(np.asarray(A, dtype=float), -3, -2))


def _realize_components(A):
    A = np.asarray(A, dtype=float)
    n = A.shape[-3]
    if A.shape[-2] != n:
        raise ValueError(f"realization needs a square matrix, got {A.shape[-3]}x{A.shape[-2]}")
    R = np.einsum("...ijc,prc->...ipjr", A, LEFT_ACTION)
    return R.reshape(A.shape[:-3] + (4 * n, 4 * n))


def realize(A):
    """Real ``4n x 4n`` matrix of the left action of a square matrix.

    Accepts a :class:`QuatMatrix` or a raw ``(..., n, n, 4)`` component
    array (batched).  The realization is a ring homomorphism, sends the
    adjoint to the transpose exactly, and is symmetric exactly when the
    input is hyperhermitian.
    """
    comp = getattr(A, "components", A)
    return _realize_components(comp)


def qmat_inv(A):
    """Inverse of a square quaternionic matrix via its realization.

    The inverse realization is itself the realization of the inverse, so
    each quaternionic entry (i, j) can be read off as the first column of
    the corresponding 4x4 block.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[-3]
    Ri = np.linalg.inv(_realize_components(A))
    blocks = Ri.reshape(A.shape[:-3] + (n, 4, n, 4))
    # component c of entry (i, j) sits at block row (i, c), block col (j, 0)
    return np.ascontiguousarray(np.moveaxis(blocks[..., :, :, :, 0], -2, -1))


class Quaternion:
    """A single quaternion w + x*i + y*j + z*k.  Immutable."""

    __slots__ = ("_c",)

    def __init__(self, w, x, y, z):
        c = np.array([w, x, y, z], dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "_c", c)

    @classmethod
    def from_components(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (4,):
            raise ValueError("expected 4 components")
        return cls(arr[0], arr[1], arr[2], arr[3])

    @property
    def components(self):
        return self._c

    @property
    def w(self):
        return float(self._c[0])

    @property
    def x(self):
        return float(self._c[1])

    @property
    def y(self):
        return float(self._c[2])

    @property
    def z(self):
        return float(self._c[3])

    def conj(self):
        return Quaternion.from_components(qconj(self._c))

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_components(qmul(self._c, other._c))
        return Quaternion.from_components(self._c * float(other))

    def __rmul__(self, other):
        return Quaternion.from_components(float(other) * self._c)

    def __add__(self, other):
        return Quaternion.from_components(self._c + other._c)

    def __sub__(self, other):
        return Quaternion.from_components(self._c - other._c)

    def __neg__(self):
        return Quaternion.from_components(-self._c)

    def __abs__(self):
        return float(qnorm(self._c))

    def __repr__(self):
        return f"Quaternion({self.w:.17g}, {self.x:.17g}, {self.y:.17g}, {self.z:.17g})"


def quat_mul(a, b):
    """Product of two :class:`Quaternion` values."""
    return a * b


class QuatMatrix:
    """Dense quaternionic matrix, components stored ``(rows, cols, 4)``."""

    __slots__ = ("_c",)

    def __init__(self, components):
        c = np.array(components, dtype=float, copy=True)
        if c.ndim != 3 or c.shape[-1] != 4:
            raise ValueError("components must have shape (rows, cols, 4)")
        c.setflags(write=False)
        object.__setattr__(self, "_c", c)

    @classmethod
    def identity(cls, n):
        c = np.zeros((n, n, 4))
        c[np.arange(n), np.arange(n), 0] = 1.0
        return cls(c)

    @classmethod
    def from_entries(cls, rows):
        c = np.array([[q.components for q in row] for row in rows], dtype=float)
        return cls(c)

    @property
    def components(self):
        return self._c

    @property
    def n_rows(self):
        return self._c.shape[0]

    @property
    def n_cols(self):
        return self._c.shape[1]

    def entry(self, i, j):
        return Quaternion.from_components(self._c[i, j])

    def adjoint(self):
        return QuatMatrix(qmat_adjoint(self._c))

    def __matmul__(self, other):
        return QuatMatrix(qmat_mul(self._c, other._c))

    def __add__(self, other):
        return QuatMatrix(self._c + other._c)

    def __sub__(self, other):
        return QuatMatrix(self._c - other._c)

    def __repr__(self):
        return f"QuatMatrix(shape={self.n_rows}x{self.n_cols})"


def _hyperhermitian_defect(components):
    return np.abs(components - qconj(np.swapaxes(components, -3, -2))).max()


def congruence(A, C):
    """Transform a hyperhermitian matrix by C* A C.

    The result is hyperhermitian again; its components are exactly
    symmetrized before return so downstream exact-symmetry invariants
    hold despite rounding in the two matrix products.
    """
    Ac = A.components if isinstance(A, QuatMatrix) else np.asarray(A, dtype=float)
    Cc = C.components if isinstance(C, QuatMatrix) else np.asarray(C, dtype=float)
    if Ac.shape[-3] != Ac.shape[-2]:
        raise ValueError("A must be square")
    if Cc.shape[-3] != Ac.shape[-2] or Cc.shape[-3] != Cc.shape[-2]:
        raise ValueError(
            f"dimension mismatch: A is {Ac.shape[-3]}x{Ac.shape[-2]}, C is {Cc.shape[-3]}x{Cc.shape[-2]}"
        )
    scale = np.abs(Ac).max() + 1.0
    if _hyperhermitian_defect(Ac) > 1e-10 * scale:
        raise ValueError("A is not hyperhermitian")
    out = qmat_mul(qmat_adjoint(Cc), qmat_mul(Ac, Cc))
    out = 0.5 * (out + qconj(np.swapaxes(out, -3, -2)))
    return QuatMatrix(out)
