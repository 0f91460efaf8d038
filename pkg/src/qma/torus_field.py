"""Periodic fields on a flat quaternionic torus and their calculus.

A grid covers [0, L_1) x ... x [0, L_4n) with uniform nodes; axis
s = 4(i-1)+p carries the p-th real coordinate of the i-th quaternionic
coordinate.  Axes of size 1 are frozen: fields are constant along them
and every derivative in that direction is zero.

The quaternionic Hessian of a scalar field pairs the 16 second partials
of each coordinate pair (i, j) with quaternionic unit products; on data
depending only on the real slices it reduces to the ordinary real
Hessian.  All second derivatives inside hess_H and the divergence-form
operator are built by composing the scheme's first-derivative operator
with itself, so that the divergence form and the trace form discretize
the same operator (the standalone second-derivative stencils exposed by
``partial(order=2)`` keep their usual compact/ full-symbol definitions).

File format: "QMAF" magic + version 0x01 + little-endian header length +
JSON header + float64 little-endian payload, C order with axis 0 slowest.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .quat_core import UNIT_PRODUCTS, qconj, qmat_inv, qmul, realize
from .hherm import HyperHermitian

__all__ = [
    "Grid",
    "ScalarField",
    "HermitianField",
    "RealSymField",
    "TrigPoly",
    "sample_trigpoly",
    "partial",
    "default_scheme",
    "hess_H",
    "analytic_hess",
    "trig_value_at",
    "trig_hess_at",
    "positive_hessian_field",
    "laplace_G",
    "laplace_U",
    "dir_laplace",
    "div_form_coeffs",
    "apply_D",
    "integrate",
    "trace_pair",
    "moore_det_field",
    "min_eig_field",
    "inv_field",
    "adjugate_field",
    "write_qmaf",
    "read_qmaf",
    "read_qmaf_header",
]

SCHEMES = ("fd2", "fd4", "spectral")

# sign table turning second partials into Hessian components:
# hess[i, j, c] = sum_{p,r} (D_{4i+p} D_{4j+r} u) * _HESS_W[p, r, c]
_CONJ_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])
_HESS_W = np.einsum("prc,r->prc", UNIT_PRODUCTS, _CONJ_SIGNS)
_HESS_W.flags.writeable = False


class Grid:
    """Uniform periodic grid on R^{4n} / (L_1 Z x ... x L_4n Z)."""

    __slots__ = ("n", "sizes", "periods", "spacings", "shape", "active")

    def __init__(self, n, sizes, periods=None):
        n = int(n)
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        sizes = tuple(int(N) for N in sizes)
        if len(sizes) != 4 * n:
            raise ValueError(f"need 4n = {4 * n} axis sizes, got {len(sizes)}")
        if any(N < 1 for N in sizes):
            raise ValueError(f"axis sizes must be >= 1, got {sizes}")
        if periods is None:
            periods = (1.0,) * (4 * n)
        periods = tuple(float(L) for L in periods)
        if len(periods) != 4 * n:
            raise ValueError(f"need 4n = {4 * n} periods, got {len(periods)}")
        if any(L <= 0 for L in periods):
            raise ValueError(f"periods must be positive, got {periods}")
        self.n = n
        self.sizes = sizes
        self.periods = periods
        self.spacings = tuple(L / N for L, N in zip(periods, sizes))
        self.shape = sizes
        self.active = tuple(s for s in range(4 * n) if sizes[s] > 1)

    @property
    def npoints(self):
        return int(np.prod(self.sizes))

    @property
    def volume(self):
        return float(np.prod(self.periods))

    def axis_coords(self, s):
        return np.arange(self.sizes[s]) * self.spacings[s]

    def coordinate_mesh(self):
        """Array of node coordinates, shape = grid shape + (4n,)."""
        axes = [self.axis_coords(s) for s in range(4 * self.n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.n == other.n
            and self.sizes == other.sizes
            and self.periods == other.periods
        )

    def __hash__(self):
        return hash((self.n, self.sizes, self.periods))

    def __repr__(self):
        return f"Grid(n={self.n}, sizes={self.sizes}, periods={self.periods})"


def _lock(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


class ScalarField:
    """Real scalar per grid point; values are finite and immutable."""

    __slots__ = ("grid", "_values")

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.isfinite(values).all():
            raise ValueError("field contains non-finite values")
        self.grid = grid
        self._values = _lock(values.copy())

    @property
    def values(self):
        return self._values

    def __add__(self, other):
        return ScalarField(self.grid, self._values + _as_values(self, other))

    def __sub__(self, other):
        return ScalarField(self.grid, self._values - _as_values(self, other))

    def __mul__(self, other):
        return ScalarField(self.grid, self._values * _as_values(self, other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self._values)

    def __repr__(self):
        return f"ScalarField({self.grid!r})"


def _as_values(field, other):
    if isinstance(other, ScalarField):
        if other.grid != field.grid:
            raise ValueError("grid mismatch")
        return other.values
    return float(other)


class HermitianField:
    """Hyperhermitian n x n matrix per grid point.

    Components shape = grid shape + (n, n, 4); the pointwise symmetry
    a_ij = conj(a_ji) is checked (defect <= 1e-10 relative) and then
    enforced exactly.
    """

    __slots__ = ("grid", "_comp")

    def __init__(self, grid, components):
        comp = np.asarray(components, dtype=float)
        want = grid.shape + (grid.n, grid.n, 4)
        if comp.shape != want:
            raise ValueError(f"components shape {comp.shape} != {want}")
        if not np.isfinite(comp).all():
            raise ValueError("field contains non-finite values")
        defect = np.abs(comp - qconj(np.swapaxes(comp, -3, -2))).max()
        scale = max(np.abs(comp).max(), 1.0)
        if defect > 1e-10 * scale:
            raise ValueError(f"pointwise values not hyperhermitian: defect {defect:.3e}")
        comp = 0.5 * (comp + qconj(np.swapaxes(comp, -3, -2)))
        self.grid = grid
        self._comp = _lock(comp)

    @classmethod
    def constant(cls, grid, matrix):
        comp = matrix.components if isinstance(matrix, HyperHermitian) else np.asarray(matrix)
        full = np.broadcast_to(comp, grid.shape + comp.shape).copy()
        return cls(grid, full)

    @property
    def components(self):
        return self._comp

    @property
    def n(self):
        return self.grid.n

    def at(self, index):
        return HyperHermitian(self._comp[tuple(index)])

    def __add__(self, other):
        return HermitianField(self.grid, self._comp + other.components)

    def __sub__(self, other):
        return HermitianField(self.grid, self._comp - other.components)

    def __repr__(self):
        return f"HermitianField({self.grid!r})"


class RealSymField:
    """Real symmetric 4n x 4n matrix per grid point, symmetric by storage:
    the strict lower triangle is mirrored bitwise from the upper one."""

    __slots__ = ("grid", "_mat")

    def __init__(self, grid, matrices):
        m = np.asarray(matrices, dtype=float)
        d = 4 * grid.n
        want = grid.shape + (d, d)
        if m.shape != want:
            raise ValueError(f"matrices shape {m.shape} != {want}")
        defect = np.abs(m - np.swapaxes(m, -1, -2)).max()
        scale = max(np.abs(m).max(), 1.0)
        if defect > 1e-9 * scale:
            raise ValueError(f"pointwise matrices not symmetric: defect {defect:.3e}")
        upper = np.triu(m)
        m = upper + np.swapaxes(np.triu(m, 1), -1, -2)
        self.grid = grid
        self._mat = _lock(m)

    @property
    def matrices(self):
        return self._mat

    def __repr__(self):
        return f"RealSymField({self.grid!r})"


class TrigPoly:
    """Real trigonometric polynomial: sum of a*cos(2 pi k.x/L) + b*sin(...).

    Terms are (k, a, b) with k an integer frequency vector.  Sampling on a
    grid rejects any term whose |k_s| exceeds the axis Nyquist limit.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        clean = []
        for idx, (k, a, b) in enumerate(terms):
            k = np.asarray(k)
            if not np.issubdtype(k.dtype, np.integer):
                kf = np.asarray(k, dtype=float)
                if np.abs(kf - np.round(kf)).max() > 0:
                    raise ValueError(f"term {idx}: frequency vector {k} is not integral")
                k = np.round(kf).astype(int)
            clean.append((k.copy(), float(a), float(b)))
        self.terms = tuple(clean)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"TrigPoly({len(self.terms)} terms)"


def _check_term(g, idx, k):
    if k.shape != (4 * g.n,):
        raise ValueError(
            f"term {idx}: frequency vector has length {k.shape[0]}, grid needs {4 * g.n}"
        )
    for s in range(4 * g.n):
        if 2 * abs(int(k[s])) > g.sizes[s]:
            raise ValueError(
                f"term {idx}: frequency {k.tolist()} exceeds the Nyquist limit "
                f"on axis {s} (size {g.sizes[s]})"
            )


def sample_trigpoly(p, g):
    """Evaluate a TrigPoly at the grid nodes."""
    vals = np.zeros(g.shape)
    for idx, (k, a, b) in enumerate(p.terms):
        _check_term(g, idx, k)
        theta = np.zeros(g.shape)
        for s in range(4 * g.n):
            if k[s] == 0:
                continue
            shape = [1] * (4 * g.n)
            shape[s] = g.sizes[s]
            theta = theta + (2 * np.pi * k[s] / g.sizes[s] * np.arange(g.sizes[s])).reshape(shape)
        vals += a * np.cos(theta) + b * np.sin(theta)
    return ScalarField(g, vals)


def default_scheme(g):
    """spectral when every active axis is a power of two >= 8, else fd2."""
    for s in g.active:
        N = g.sizes[s]
        if N < 8 or N & (N - 1):
            return "fd2"
    return "spectral"


def _resolve_scheme(g, scheme):
    if scheme is None:
        return default_scheme(g)
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme


_MIN_SIZE = {"fd2": 4, "fd4": 6, "spectral": 2}


def _d_raw(g, arr, axis, order, scheme):
    N = g.sizes[axis]
    if N == 1:
        return np.zeros_like(arr)
    if N < _MIN_SIZE[scheme]:
        raise ValueError(f"axis {axis} has {N} points; scheme {scheme} needs >= {_MIN_SIZE[scheme]}")
    h = g.spacings[axis]
    if scheme == "spectral":
        k = np.fft.fftfreq(N) * N
        if order == 1:
            k = k.copy()
            if N % 2 == 0:
                k[N // 2] = 0.0  # odd derivative of the Nyquist mode is zero
            mult = 1j * (2 * np.pi / g.periods[axis]) * k
        else:
            mult = -((2 * np.pi / g.periods[axis]) * k) ** 2
        shape = [1] * arr.ndim
        shape[axis] = N
        F = np.fft.fft(arr, axis=axis)
        F *= mult.reshape(shape)
        return np.fft.ifft(F, axis=axis).real
    up = np.roll(arr, -1, axis=axis)
    dn = np.roll(arr, 1, axis=axis)
    if scheme == "fd2":
        if order == 1:
            return (up - dn) / (2 * h)
        return (up - 2 * arr + dn) / h**2
    up2 = np.roll(arr, -2, axis=axis)
    dn2 = np.roll(arr, 2, axis=axis)
    if order == 1:
        return (-up2 + 8 * up - 8 * dn + dn2) / (12 * h)
    return (-up2 + 16 * up - 30 * arr + 16 * dn - dn2) / (12 * h**2)


def _d1(g, arr, axis, scheme):
    return _d_raw(g, arr, axis, 1, scheme)


def partial(f, axis, order=1, scheme=None):
    """Periodic partial derivative of a scalar field along one axis."""
    g = f.grid
    if not 0 <= axis < 4 * g.n:
        raise ValueError(f"axis {axis} out of range for 4n = {4 * g.n}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    scheme = _resolve_scheme(g, scheme)
    return ScalarField(g, _d_raw(g, f.values, axis, order, scheme))


def hess_H(u, scheme=None):
    """Quaternionic Hessian of a scalar field.

    Every entry, the diagonal included, composes the scheme's first
    derivative with itself; this keeps the operator identical to the one
    hiding inside the divergence form, which matters once both appear in
    the same Newton iteration.
    """
    g = u.grid
    scheme = _resolve_scheme(g, scheme)
    n = g.n
    arr = u.values
    firsts = {s: _d1(g, arr, s, scheme) for s in g.active}
    comp = np.zeros(g.shape + (n, n, 4))
    for s in g.active:
        i, p = divmod(s, 4)
        for t in g.active:
            if t < s:
                continue
            m = _d1(g, firsts[s], t, scheme)
            j, r = divmod(t, 4)
            comp[..., i, j, :] += m[..., None] * _HESS_W[p, r]
            if t != s:
                comp[..., j, i, :] += m[..., None] * _HESS_W[r, p]
    comp = 0.5 * (comp + qconj(np.swapaxes(comp, -3, -2)))
    return HermitianField(g, comp)


def trig_value_at(kappa_terms, points):
    """Evaluate sum of a*cos(kappa.x) + b*sin(kappa.x) at arbitrary points.

    kappa_terms: iterable of (kappa, a, b) with kappa a real length-4n
    angular frequency vector; points has shape (..., 4n).
    """
    points = np.asarray(points, dtype=float)
    vals = np.zeros(points.shape[:-1])
    for kappa, a, b in kappa_terms:
        theta = points @ np.asarray(kappa, dtype=float)
        vals += a * np.cos(theta) + b * np.sin(theta)
    return vals


def trig_hess_at(kappa_terms, points, n=None):
    """Exact quaternionic Hessian of a trigonometric sum at arbitrary points."""
    points = np.asarray(points, dtype=float)
    if n is None:
        n = points.shape[-1] // 4
    comp = np.zeros(points.shape[:-1] + (n, n, 4))
    for kappa, a, b in kappa_terms:
        kappa = np.asarray(kappa, dtype=float)
        theta = points @ kappa
        base = -(a * np.cos(theta) + b * np.sin(theta))
        K = np.outer(kappa, kappa).reshape(n, 4, n, 4)
        coeff = np.einsum("ipjr,prc->ijc", K, _HESS_W)
        comp += base[..., None, None, None] * coeff
    return comp


def _kappa_terms(p, g):
    out = []
    for idx, (k, a, b) in enumerate(p.terms):
        _check_term(g, idx, k)
        kappa = 2 * np.pi * np.asarray(k, dtype=float) / np.asarray(g.periods)
        out.append((kappa, a, b))
    return out


def analytic_hess(p, g):
    """Continuum quaternionic Hessian of a TrigPoly sampled at the nodes.

    Exact at any resolution and scheme-independent; the workhorse behind
    manufactured data.
    """
    comp = trig_hess_at(_kappa_terms(p, g), g.coordinate_mesh(), n=g.n)
    comp = 0.5 * (comp + qconj(np.swapaxes(comp, -3, -2)))
    return HermitianField(g, comp)


def positive_hessian_field(rho, g):
    """U = c*Id + hess(rho) with c = 1.5*|worst negative eigenvalue| + 1.

    Built from the analytic Hessian of the trig data, so positivity holds
    at any resolution.  Returns (field, c).
    """
    H = analytic_hess(rho, g)
    worst = float(min_eig_field(H).values.min())
    c = 1.5 * abs(worst) + 1.0
    comp = H.components.copy()
    idx = np.arange(g.n)
    comp[..., idx, idx, 0] += c
    return HermitianField(g, comp), c


def trace_pair(A, B):
    """Pointwise real part of Tr(A.B) for two hyperhermitian stacks."""
    return np.einsum("...ikc,...ikc->...", A, B)


def moore_det_field(U, method="auto"):
    """Pointwise Moore determinant of a hermitian field."""
    comp = U.components
    return ScalarField(U.grid, _moore_comp(comp, method))


def _moore_comp(comp, method="auto"):
    n = comp.shape[-2]
    if method == "auto":
        method = "closed" if n <= 2 else "eig"
    if method == "closed":
        if n == 1:
            return comp[..., 0, 0, 0].copy()
        if n == 2:
            a = comp[..., 0, 0, 0]
            b = comp[..., 1, 1, 0]
            q = comp[..., 0, 1, :]
            return a * b - (q * q).sum(axis=-1)
        raise ValueError(f"closed-form determinant only for n <= 2, got n={n}")
    if method == "eig":
        w = np.linalg.eigvalsh(realize(comp))
        return w[..., ::4].prod(axis=-1)
    raise ValueError(f"unknown method {method!r}")


def min_eig_field(U):
    """Pointwise smallest eigenvalue of a hermitian field."""
    return ScalarField(U.grid, _mineig_comp(U.components))


def _mineig_comp(comp):
    n = comp.shape[-2]
    if n == 1:
        return comp[..., 0, 0, 0].copy()
    if n == 2:
        a = comp[..., 0, 0, 0]
        b = comp[..., 1, 1, 0]
        q = comp[..., 0, 1, :]
        return (a + b) / 2 - np.sqrt(((a - b) / 2) ** 2 + (q * q).sum(axis=-1))
    return np.linalg.eigvalsh(realize(comp))[..., 0]


def adjugate_field(U):
    """Pointwise adjugate (det * inverse), closed form for n <= 2."""
    return HermitianField(U.grid, _adjugate_comp(U.components))


def _adjugate_comp(comp):
    n = comp.shape[-2]
    if n == 1:
        out = np.zeros_like(comp)
        out[..., 0, 0, 0] = 1.0
        return out
    if n == 2:
        out = np.empty_like(comp)
        out[..., 0, 0, :] = 0.0
        out[..., 1, 1, :] = 0.0
        out[..., 0, 0, 0] = comp[..., 1, 1, 0]
        out[..., 1, 1, 0] = comp[..., 0, 0, 0]
        out[..., 0, 1, :] = -comp[..., 0, 1, :]
        out[..., 1, 0, :] = -comp[..., 1, 0, :]
        return out
    det = _moore_comp(comp, "eig")
    return det[..., None, None, None] * _inv_comp(comp)


def inv_field(U):
    """Pointwise inverse of a hermitian field (must be invertible)."""
    _require_invertible(U.components, "field")
    return HermitianField(U.grid, _inv_comp(U.components))


def _inv_comp(comp):
    n = comp.shape[-2]
    if n == 1:
        out = np.zeros_like(comp)
        out[..., 0, 0, 0] = 1.0 / comp[..., 0, 0, 0]
        return out
    if n == 2:
        det = _moore_comp(comp, "closed")
        return _adjugate_comp(comp) / det[..., None, None, None]
    inv = qmat_inv(comp)
    return 0.5 * (inv + qconj(np.swapaxes(inv, -3, -2)))


def _worst_index(values, reducer=np.argmin):
    return tuple(int(v) for v in np.unravel_index(reducer(values), values.shape))


def _require_positive(field, name):
    m = _mineig_comp(field.components)
    worst = m.min()
    if worst <= 0:
        idx = _worst_index(m)
        raise ValueError(
            f"{name} is singular at grid point {idx} (min eigenvalue {worst:.6g})"
        )


def _require_invertible(comp, name):
    d = np.abs(_moore_comp(comp))
    worst = d.min()
    if worst <= 1e-13 * max(d.max(), 1.0):
        idx = _worst_index(d)
        raise ValueError(f"{name} is singular at grid point {idx} (|det| = {worst:.6g})")


def _trace_laplacian(h, M, name, scheme):
    g = h.grid
    H = hess_H(h, scheme)
    if M is None:
        idx = np.arange(g.n)
        return ScalarField(g, H.components[..., idx, idx, 0].sum(axis=-1))
    if M.grid != g:
        raise ValueError("grid mismatch")
    _require_positive(M, name)
    inv = _inv_comp(M.components)
    return ScalarField(g, trace_pair(inv, H.components))


def laplace_G(h, G=None, scheme=None):
    """Tr(G^{-1} hess_H(h)); G omitted means the flat 4n-Laplacian."""
    return _trace_laplacian(h, G, "G", scheme)


def laplace_U(v, U, scheme=None):
    """Tr(U^{-1} hess_H(v)) for a positive hermitian field U."""
    return _trace_laplacian(v, U, "U", scheme)


def dir_laplace(u, zeta, scheme=None):
    """Laplacian along the quaternionic line spanned by a unit vector zeta."""
    zeta = np.asarray(zeta, dtype=float)
    g = u.grid
    if zeta.shape != (g.n, 4):
        raise ValueError(f"zeta must have shape ({g.n}, 4), got {zeta.shape}")
    norm = np.sqrt((zeta**2).sum())
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"zeta must be a unit vector, |zeta| = {norm:.12g}")
    proj = qmul(zeta[:, None, :], qconj(zeta[None, :, :]))
    H = hess_H(u, scheme)
    return ScalarField(g, np.einsum("...ikc,ikc->...", H.components, proj))


def div_form_coeffs(U):
    """Real symmetric coefficient field a = realize(det(U) * U^{-1})."""
    g = U.grid
    comp = U.components
    if g.n == 1:
        # det U * U^{-1} = 1 for 1x1 matrices
        a = np.zeros(g.shape + (4, 4))
        a[..., np.arange(4), np.arange(4)] = 1.0
        return RealSymField(g, a)
    _require_invertible(comp, "U")
    return RealSymField(g, realize(_adjugate_comp(comp)))


def apply_D(U, h, form="divergence", scheme=None):
    """det(U)-weighted Laplacian Tr(U^{-1} hess h), two discretizations.

    form="trace" multiplies the pointwise trace by det U; form="divergence"
    computes sum_s D_s(sum_t a_st D_t h) with a from div_form_coeffs.  They
    agree up to discretization error, and the divergence form is discretely
    self-adjoint.
    """
    g = U.grid
    if h.grid != g:
        raise ValueError("grid mismatch")
    scheme = _resolve_scheme(g, scheme)
    if form == "trace":
        comp = U.components
        _require_invertible(comp, "U")
        det = _moore_comp(comp)
        inv = _inv_comp(comp)
        tr = trace_pair(inv, hess_H(h, scheme).components)
        return ScalarField(g, det * tr)
    if form == "divergence":
        a = div_form_coeffs(U).matrices
        grads = {t: _d1(g, h.values, t, scheme) for t in g.active}
        out = np.zeros(g.shape)
        for s in g.active:
            flux = np.zeros(g.shape)
            for t in g.active:
                flux += a[..., s, t] * grads[t]
            out += _d1(g, flux, s, scheme)
        return ScalarField(g, out)
    raise ValueError(f"unknown form {form!r}; expected 'trace' or 'divergence'")


def integrate(f, weight=None):
    """Torus quadrature: mean of the pointwise product times the volume.

    The uniform-grid trapezoid rule, exact for trig polynomials below the
    Nyquist frequency.  Reduction is a plain sequential sum, so results
    are deterministic.
    """
    vals = f.values
    if weight is not None:
        if isinstance(weight, ScalarField):
            if weight.grid != f.grid:
                raise ValueError("grid mismatch")
            vals = vals * weight.values
        else:
            vals = vals * float(weight)
    return float(vals.mean()) * f.grid.volume


# ---------------------------------------------------------------------------
# QMAF container

_MAGIC = b"QMAF"
_VERSION = 1


def _upper_pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def write_qmaf(path, field):
    """Write a scalar or hermitian field to a QMAF file."""
    g = field.grid
    if isinstance(field, ScalarField):
        kind = "scalar"
        payload = field.values.astype("<f8").tobytes()
    elif isinstance(field, HermitianField):
        kind = "hermitian"
        n = g.n
        comp = field.components
        width = n + 2 * n * (n - 1)
        flat = np.empty(g.shape + (width,))
        idx = np.arange(n)
        flat[..., :n] = comp[..., idx, idx, 0]
        pos = n
        for i, j in _upper_pairs(n):
            flat[..., pos : pos + 4] = comp[..., i, j, :]
            pos += 4
        payload = flat.astype("<f8").tobytes()
    else:
        raise TypeError(f"cannot serialize {type(field).__name__}")
    header = {
        "n": g.n,
        "sizes": list(g.sizes),
        "periods": [float(L) for L in g.periods],
        "kind": kind,
        "dtype": "f64le",
        "order": "row-major-axis0-slowest",
    }
    hb = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        fh.write(struct.pack("<I", len(hb)))
        fh.write(hb)
        fh.write(payload)


def _parse_header(raw, path):
    if len(raw) < 9 or raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a QMAF file")
    if raw[4] != _VERSION:
        raise ValueError(f"{path}: unsupported QMAF version {raw[4]}")
    hlen = struct.unpack("<I", raw[5:9])[0]
    if len(raw) < 9 + hlen:
        raise ValueError(f"{path}: truncated header")
    header = json.loads(raw[9 : 9 + hlen].decode("utf-8"))
    return header, raw[9 + hlen :]


def read_qmaf_header(path):
    with open(path, "rb") as fh:
        raw = fh.read(9)
        if len(raw) < 9 or raw[:4] != _MAGIC:
            raise ValueError(f"{path}: not a QMAF file")
        if raw[4] != _VERSION:
            raise ValueError(f"{path}: unsupported QMAF version {raw[4]}")
        hlen = struct.unpack("<I", raw[5:9])[0]
        hb = fh.read(hlen)
    if len(hb) < hlen:
        raise ValueError(f"{path}: truncated header")
    return json.loads(hb.decode("utf-8"))


def read_qmaf(path):
    """Read a QMAF file back into a ScalarField or HermitianField."""
    with open(path, "rb") as fh:
        raw = fh.read()
    header, payload = _parse_header(raw, path)
    g = Grid(header["n"], header["sizes"], header["periods"])
    data = np.frombuffer(payload, dtype="<f8")
    if header["kind"] == "scalar":
        if data.size != g.npoints:
            raise ValueError(f"{path}: payload has {data.size} values, expected {g.npoints}")
        return ScalarField(g, data.reshape(g.shape))
    if header["kind"] == "hermitian":
        n = g.n
        width = n + 2 * n * (n - 1)
        if data.size != g.npoints * width:
            raise ValueError(
                f"{path}: payload has {data.size} values, expected {g.npoints * width}"
            )
        flat = data.reshape(g.shape + (width,))
        comp = np.zeros(g.shape + (n, n, 4))
        idx = np.arange(n)
        comp[..., idx, idx, 0] = flat[..., :n]
        pos = n
        for i, j in _upper_pairs(n):
            comp[..., i, j, :] = flat[..., pos : pos + 4]
            comp[..., j, i, :] = qconj(flat[..., pos : pos + 4])
            pos += 4
        return HermitianField(g, comp)
    raise ValueError(f"{path}: unknown kind {header['kind']!r}")
