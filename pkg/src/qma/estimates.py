"""Numerical verifiers for the hyperhermitian calculus and its inequalities.

Each verifier returns a CheckReport with a signed margin: how far the data
sits on the safe side of the identity or bound it probes (negative means a
violation).  A report passes when margin >= -tol.  Equality checks use
margin = -|worst defect|, inequality checks use the pointwise minimum of
lhs - rhs, so the two kinds fold uniformly.

Reductions never depend on thread count or dict ordering, so a fixed
(seed, trials) pair reproduces every suite bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .hherm import (
    HyperHermitian,
    eig,
    mixed_det,
    moore_det,
    random_hyperhermitian,
    re_trace,
)
from .quat_core import (
    UNIT_PRODUCTS,
    congruence,
    qconj,
    qmat_adjoint,
    qmat_mul,
    qmul,
    realize,
)
from .torus_field import (
    Grid,
    HermitianField,
    ScalarField,
    TrigPoly,
    _HESS_W,
    _d1,
    _inv_comp,
    _kappa_terms,
    _mineig_comp,
    _moore_comp,
    _require_invertible,
    _resolve_scheme,
    _worst_index,
    analytic_hess,
    apply_D,
    dir_laplace,
    div_form_coeffs,
    integrate,
    laplace_G,
    laplace_U,
    partial,
    positive_hessian_field,
    sample_trigpoly,
    trace_pair,
    trig_hess_at,
)

SUITES = ("algebra", "calculus", "estimates", "all")

# coarse error envelope for stencil schemes: tol = envelope * h^order
_STENCIL_ENVELOPE = 10.0


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verifier: margin >= -tol means the check passed."""

    name: str
    margin: float
    tol: float
    samples: int = 1
    seed: int | None = None
    location: object = None

    @property
    def passed(self):
        return bool(self.margin >= -self.tol)


def reports_to_csv(reports):
    """Fixed-header CSV, floats at full precision."""
    lines = ["check,seed,samples,margin,tol,pass"]
    for r in reports:
        seed = "" if r.seed is None else str(r.seed)
        lines.append(
            f"{r.name},{seed},{r.samples},{r.margin:.17g},{r.tol:.17g},{1 if r.passed else 0}"
        )
    return "\n".join(lines) + "\n"


def reports_to_json(reports):
    checks = []
    for r in reports:
        loc = list(r.location) if isinstance(r.location, tuple) else r.location
        checks.append(
            {
                "check": r.name,
                "seed": r.seed,
                "samples": r.samples,
                "margin": r.margin,
                "tol": r.tol,
                "pass": r.passed,
                "location": loc,
            }
        )
    failed = sum(1 for r in reports if not r.passed)
    return (
        json.dumps(
            {"total": len(reports), "failed": failed, "passed": failed == 0, "checks": checks},
            indent=2,
        )
        + "\n"
    )


def _comp_of(A):
    return A.components if hasattr(A, "components") else np.asarray(A, dtype=float)


def _require_posdef(A, label):
    comp = _comp_of(A)
    w = float(np.linalg.eigvalsh(realize(comp))[0])
    if w <= 0:
        raise ValueError(f"{label} is not positive definite (min eigenvalue {w:.6g})")
    return comp


def _require_positive_field(U, label):
    m = _mineig_comp(U.components)
    worst = float(m.min())
    if worst <= 0:
        idx = _worst_index(m)
        raise ValueError(
            f"{label} is not positive at grid point {idx} (min eigenvalue {worst:.6g})"
        )


def _stencil_factor(g, scheme, spectral_factor):
    if scheme == "spectral":
        return spectral_factor
    h = max(g.spacings[s] for s in g.active)
    return _STENCIL_ENVELOPE * h ** (4 if scheme == "fd4" else 2)


# ---------------------------------------------------------------------------
# pointwise matrix inequalities


def check_det_ineq(A, B):
    """Concavity bound for positive pairs.

    For positive hyperhermitian A, B of size n the trace of A^{-1}(A - B)
    never exceeds n det(A)^{-1/n} (det(A)^{1/n} - det(B)^{1/n}); margin is
    right side minus left side.
    """
    Ac = _require_posdef(A, "A")
    Bc = _require_posdef(B, "B")
    n = Ac.shape[0]
    det_a = moore_det(Ac)
    det_b = moore_det(Bc)
    lhs = float(re_trace(qmat_mul(_inv_comp(Ac), Ac - Bc)))
    rhs = n * det_a ** (-1.0 / n) * (det_a ** (1.0 / n) - det_b ** (1.0 / n))
    margin = float(rhs - lhs)
    scale = max(abs(lhs), abs(rhs)) + 1.0
    return CheckReport(name="det_ineq", margin=margin, tol=1e-10 * scale)


def check_mixed_trace(A, B):
    """det(A) Tr(A^{-1}B) against n times the polarized determinant with one
    B slot; margin is minus the absolute defect."""
    Ac = _comp_of(A)
    Bc = _comp_of(B)
    n = Ac.shape[0]
    det_a = moore_det(Ac)
    if abs(det_a) <= 1e-13 * (float(np.abs(Ac).max()) ** n + 1.0):
        raise ValueError(f"A is singular (det = {det_a:.6g})")
    lhs = det_a * float(re_trace(qmat_mul(_inv_comp(Ac), Bc)))
    args = [HyperHermitian(Ac)] * (n - 1) + [HyperHermitian(Bc)]
    rhs = n * mixed_det(*args)
    scale = max(abs(lhs), abs(rhs)) + 1.0
    return CheckReport(name="mixed_trace", margin=-abs(lhs - rhs), tol=1e-9 * scale)


def check_quad_trace(A, B):
    """Re Tr((A^{-1}B)^2) for positive A and hyperhermitian B.

    The value itself is the margin: it must be nonnegative whatever the
    signature of B.
    """
    Ac = _require_posdef(A, "A")
    Bc = _comp_of(B)
    X = qmat_mul(_inv_comp(Ac), Bc)
    value = float(re_trace(qmat_mul(X, X)))
    return CheckReport(name="quad_trace", margin=value, tol=1e-10 * (abs(value) + 1.0))


# ---------------------------------------------------------------------------
# field inequalities


def dir_laplace_entries(U, zeta, scheme=None):
    """Directional Laplacian applied to every entry of a hermitian field.

    Same second-order operator as dir_laplace on scalars, assembled once as
    a constant real quadratic form in the flat coordinates and applied to
    the whole component stack with two sweeps of first derivatives.
    """
    g = U.grid
    scheme = _resolve_scheme(g, scheme)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (g.n, 4):
        raise ValueError(f"zeta must have shape ({g.n}, 4), got {zeta.shape}")
    norm = np.sqrt((zeta**2).sum())
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"zeta must be a unit vector, |zeta| = {norm:.12g}")
    proj = qmul(zeta[:, None, :], qconj(zeta[None, :, :]))
    m = np.einsum("prc,ijc->ipjr", _HESS_W, proj).reshape(4 * g.n, 4 * g.n)
    comp = U.components
    firsts = {
        t: _d1(g, comp, t, scheme) for t in g.active if float(np.abs(m[:, t]).max()) > 0.0
    }
    out = np.zeros_like(comp)
    for s in g.active:
        flux = None
        for t, ft in firsts.items():
            w = m[s, t]
            if w == 0.0:
                continue
            flux = w * ft if flux is None else flux + w * ft
        if flux is not None:
            out += _d1(g, flux, s, scheme)
    return HermitianField(g, out)


def check_dir_ineq(U, zeta, scheme=None):
    """Pointwise bound along one quaternionic line: for a positive field U,
    Tr(U^{-1} Lap_zeta U) dominates Lap_zeta log det U at every node.

    Margin is the minimum of the difference over the grid.
    """
    g = U.grid
    scheme = _resolve_scheme(g, scheme)
    _require_positive_field(U, "U")
    dl = dir_laplace_entries(U, zeta, scheme)
    lhs = trace_pair(_inv_comp(U.components), dl.components)
    logf = ScalarField(g, np.log(_moore_comp(U.components)))
    rhs = dir_laplace(logf, np.asarray(zeta, dtype=float), scheme).values
    diff = lhs - rhs
    margin = float(diff.min())
    loc = _worst_index(diff)
    scale = float(max(np.abs(lhs).max(), np.abs(rhs).max())) + 1.0
    tol = _stencil_factor(g, scheme, 1e-6) * scale
    return CheckReport(
        name="dir_ineq", margin=margin, tol=tol, samples=g.npoints, location=loc
    )


def check_pogorelov(U, scheme=None):
    """Flat-Laplacian comparison used by second-derivative bounds.

    With w = Tr(U) the field 2 sqrt(w) must satisfy
    Tr(U^{-1} hess(2 sqrt(w))) >= w^{-1/2} Lap(log det U) pointwise, where
    Lap is the flat Laplacian.  Margin is the minimum of the difference.
    """
    g = U.grid
    scheme = _resolve_scheme(g, scheme)
    _require_positive_field(U, "U")
    tr = re_trace(U.components)
    v = ScalarField(g, 2.0 * np.sqrt(tr))
    lhs = laplace_U(v, U, scheme).values
    logf = ScalarField(g, np.log(_moore_comp(U.components)))
    rhs = laplace_G(logf, None, scheme).values / np.sqrt(tr)
    diff = lhs - rhs
    margin = float(diff.min())
    loc = _worst_index(diff)
    scale = float(max(np.abs(lhs).max(), np.abs(rhs).max())) + 1.0
    tol = _stencil_factor(g, scheme, 1e-5) * scale
    return CheckReport(
        name="pogorelov", margin=margin, tol=tol, samples=g.npoints, location=loc
    )


def check_third_deriv(U, z, scheme=None, eps_pos=1e-10):
    """Diagonal-frame bound on first derivatives of a positive field.

    At the chosen node the field is diagonalized, U(z) = Xi D Xi*, and the
    first derivatives are rotated into the same frame: the derivative along
    the new axis t is the chain-rule combination sum_s R[s, t] Xi* U_s Xi
    with R the real realization of Xi, so the denominators below and the
    direction index agree.  With W_t that matrix and d the diagonal of D,
    the weighted diagonal sum

        sum_{t, k} |W_t[k, k]|^2 / (d_{q(t)} d_k)

    (q(t) = quaternion coordinate owning axis t) may not exceed twice the
    full sum over all entries.  Margin is rhs - lhs.
    """
    g = U.grid
    n = g.n
    scheme = _resolve_scheme(g, scheme)
    z = tuple(int(i) for i in np.asarray(z).ravel())
    if len(z) != 4 * n:
        raise ValueError(f"point must have {4 * n} indices, got {len(z)}")
    for s, (i_, size) in enumerate(zip(z, g.sizes)):
        if not 0 <= i_ < size:
            raise ValueError(f"point index {i_} out of range for axis {s} (size {size})")
    _require_positive_field(U, "U")
    Xi = eig(HyperHermitian(U.components[z])).eigenvectors.components
    R = realize(Xi)
    dU = np.zeros((4 * n, n, n, 4))
    for s in g.active:
        dU[s] = _d1(g, U.components, s, scheme)[z]
    W = np.einsum("st,sijc->tijc", R, dU)
    W = qmat_mul(qmat_adjoint(Xi), qmat_mul(W, Xi))
    D = qmat_mul(qmat_adjoint(Xi), qmat_mul(U.components[z], Xi))
    d = D[np.arange(n), np.arange(n), 0]
    if float(d.min()) <= eps_pos:
        raise ValueError(
            f"degenerate diagonal entry {float(d.min()):.6g} <= eps_pos = {eps_pos:.3g}"
        )
    sq = (W**2).sum(axis=-1)  # |W_t[k, i]|^2 with layout (t, k, i)
    q_of_axis = np.repeat(np.arange(n), 4)
    diag_sq = sq[:, np.arange(n), np.arange(n)]
    lhs = float((diag_sq / (d[q_of_axis][:, None] * d[None, :])).sum())
    rhs = 2.0 * float((sq / (d[None, :, None] * d[None, None, :])).sum())
    scale = max(lhs, rhs) + 1.0
    return CheckReport(
        name="third_deriv", margin=rhs - lhs, tol=1e-6 * scale, location=z
    )


# ---------------------------------------------------------------------------
# calculus identities


def check_logdet_identity(U, a, b, scheme=None):
    """Second derivative of log det for an invertible field.

    D_a D_b log det U must equal Tr(U^{-1} U_ab) - Re Tr(U^{-1}U_a U^{-1}U_b)
    with all derivatives entrywise; margin is minus the worst defect.
    """
    g = U.grid
    scheme = _resolve_scheme(g, scheme)
    for ax in (a, b):
        if not 0 <= ax < 4 * g.n:
            raise ValueError(f"axis {ax} out of range for 4n = {4 * g.n}")
    comp = U.components
    _require_invertible(comp, "U")
    det = _moore_comp(comp)
    if float(det.min()) <= 0.0:
        idx = _worst_index(det)
        raise ValueError(
            f"determinant must be positive to take its logarithm; "
            f"min {float(det.min()):.6g} at grid point {idx}"
        )
    inv = _inv_comp(comp)
    Ua = _d1(g, comp, a, scheme)
    Ub = _d1(g, comp, b, scheme)
    Uab = _d1(g, Ua, b, scheme)
    lhs = trace_pair(inv, Uab)
    mid = re_trace(qmat_mul(qmat_mul(inv, Ua), qmat_mul(inv, Ub)))
    lab = _d1(g, _d1(g, np.log(det), a, scheme), b, scheme)
    defect = lhs - mid - lab
    worst = float(np.abs(defect).max())
    loc = _worst_index(np.abs(defect), np.argmax)
    scale = (
        float(max(np.abs(lhs).max(), np.abs(mid).max(), np.abs(lab).max())) + 1.0
    )
    tol = _stencil_factor(g, scheme, 1e-7) * scale
    return CheckReport(
        name="logdet_identity", margin=-worst, tol=tol, samples=g.npoints, location=loc
    )


def _div_defect(U, scheme):
    """Worst normalized column divergence of the coefficient realization."""
    g = U.grid
    a = div_form_coeffs(U).matrices
    norm = float(np.abs(a).max()) + 1.0
    div = np.zeros(g.shape + (4 * g.n,))
    for s in g.active:
        div += _d1(g, a[..., s, :], s, scheme)
    rel = np.abs(div) / norm
    return float(rel.max()), _worst_index(rel.max(axis=-1), np.argmax)


def check_divergence(U, scheme=None, tol=None):
    """Row-by-row divergence of the det-weighted inverse realization.

    The columns of a = realize(det(U) U^{-1}) are discretely divergence
    free; margin is minus the worst |sum_s D_s a_st| over nodes and
    columns, normalized by 1 + max|a|.  Default tol is 1e-7 for the
    spectral scheme and a coarse h^2 (h^4) envelope for stencils.
    """
    g = U.grid
    scheme = _resolve_scheme(g, scheme)
    worst, loc = _div_defect(U, scheme)
    if tol is None:
        tol = _stencil_factor(g, scheme, 1e-7)
    return CheckReport(
        name="divergence", margin=-worst, tol=float(tol), samples=g.npoints, location=loc
    )


def check_divergence_refinement(rho, grid, scheme="fd2", c=None):
    """Observed convergence order of the divergence defect under refinement.

    Builds c Id + analytic hessian of rho on the given grid and on the grid
    with every active axis doubled (same c, so coarse and fine discretize
    one continuum field), measures both defects, and reports
    margin = min(order - 1.7, 2.3 - order) with order = log2 of their
    ratio.  A second-order stencil passes with margin about 0.3.
    """
    if scheme == "spectral":
        raise ValueError("refinement order needs a stencil scheme, not spectral")
    scheme = _resolve_scheme(grid, scheme)
    if c is None:
        _, c = positive_hessian_field(rho, grid)
    fine = Grid(
        grid.n, tuple(2 * N if N > 1 else 1 for N in grid.sizes), grid.periods
    )
    idx = np.arange(grid.n)

    def shifted(g):
        comp = analytic_hess(rho, g).components.copy()
        comp[..., idx, idx, 0] += c
        return HermitianField(g, comp)

    d_coarse, _ = _div_defect(shifted(grid), scheme)
    d_fine, loc = _div_defect(shifted(fine), scheme)
    if d_fine <= 1e-12:
        raise ValueError(
            f"fine-grid defect {d_fine:.3g} is at the roundoff floor; "
            "the data is too smooth to estimate an order"
        )
    order = float(np.log2(d_coarse / d_fine))
    margin = min(order - 1.7, 2.3 - order)
    return CheckReport(
        name="divergence_order", margin=margin, tol=0.0, samples=2, location=loc
    )


def _right_mult_block(a):
    # components of q -> q a as a real 4x4 acting on component columns
    return np.einsum("r,crp->pc", np.asarray(a, dtype=float), UNIT_PRODUCTS)


def check_gl_transform(rho, grid, A, right_unit=None, samples=64, seed=0):
    """Covariance of the quaternionic Hessian under unitary coordinate maps.

    For the trig data rho and the map q -> A(q a) (A unitary, a an optional
    unit quaternion), the Hessian of the composition must equal the pulled
    back conjugated Hessian, A* H(Aqa) A.  Both sides are evaluated in
    closed form at `samples` random points, so the defect measures the
    algebra and not a discretization.  Margin is minus the worst entry
    defect.
    """
    n = grid.n
    Ac = _comp_of(A)
    if Ac.shape != (n, n, 4):
        raise ValueError(f"A must be {n}x{n} quaternionic, got shape {Ac.shape}")
    R = realize(Ac)
    ortho = float(np.abs(R.T @ R - np.eye(4 * n)).max())
    if ortho > 1e-12:
        raise ValueError(
            f"A is not unitary (realization departs from orthogonal by {ortho:.3g})"
        )
    M = R
    if right_unit is not None:
        a = np.asarray(right_unit, dtype=float)
        if a.shape != (4,) or abs(float((a**2).sum()) - 1.0) > 1e-12:
            raise ValueError("right_unit must be a unit quaternion")
        M = R @ np.kron(np.eye(n), _right_mult_block(a))
    kappa = _kappa_terms(rho, grid)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(samples, 4 * n)) * np.asarray(grid.periods)
    composed = [(M.T @ np.asarray(k, dtype=float), ca, cb) for k, ca, cb in kappa]
    lhs = trig_hess_at(composed, pts, n)
    inner = trig_hess_at(kappa, pts @ M.T, n)
    rhs = qmat_mul(qmat_adjoint(Ac), qmat_mul(inner, Ac))
    defect = float(np.abs(lhs - rhs).max())
    scale = float(max(np.abs(lhs).max(), np.abs(rhs).max())) + 1.0
    return CheckReport(
        name="gl_transform", margin=-defect, tol=1e-8 * scale, samples=samples
    )


# ---------------------------------------------------------------------------
# seeded data and suites


def _random_trig(rng, grid, nterms, kmax, amp):
    terms = []
    for _ in range(nterms):
        k = np.zeros(4 * grid.n, dtype=int)
        for s in grid.active:
            k[s] = rng.integers(-kmax, kmax + 1)
        if not k.any():
            k[grid.active[0]] = 1
        terms.append((k, rng.normal() * amp, rng.normal() * amp))
    return TrigPoly(terms)


def random_field(rng, grid, nterms=4, kmax=1, amp=0.002):
    """Seeded positive test field c Id + hess(rho); returns (U, rho, c)."""
    rho = _random_trig(rng, grid, nterms, kmax, amp)
    U, c = positive_hessian_field(rho, grid)
    return U, rho, c


def _random_axis_poly(rng, grid, nterms, amp):
    # one active axis per term: keeps every frequency vector short, so the
    # log-determinant stays well inside the resolvable band
    act = list(grid.active)
    terms = []
    for j in range(nterms):
        k = np.zeros(4 * grid.n, dtype=int)
        k[act[j % len(act)]] = 1 if rng.integers(0, 2) == 0 else -1
        terms.append((k, rng.normal() * amp, rng.normal() * amp))
    return TrigPoly(terms)


def _random_separable(rng, grid, amp):
    # every frequency lives inside a single quaternionic coordinate, so the
    # Hessian is diagonal at every node
    terms = []
    for i in range(grid.n):
        axes = [s for s in grid.active if s // 4 == i]
        for _ in (0, 1):
            k = np.zeros(4 * grid.n, dtype=int)
            for s in axes:
                k[s] = rng.integers(-1, 2)
            if not k.any():
                k[axes[0]] = 1
            terms.append((k, rng.normal() * amp, rng.normal() * amp))
    return TrigPoly(terms)


def _random_cross(rng, grid, amp):
    # pure-sine frequencies straddling two quaternionic coordinates: zero
    # Hessian at the origin but nonzero third derivatives
    a0 = [s for s in grid.active if s // 4 == 0]
    a1 = [s for s in grid.active if s // 4 == 1]
    terms = []
    for _ in range(3):
        k = np.zeros(4 * grid.n, dtype=int)
        k[a0[rng.integers(0, len(a0))]] = 1
        k[a1[rng.integers(0, len(a1))]] = 1
        terms.append((k, 0.0, rng.normal() * amp))
    return TrigPoly(terms)


def _shifted_random(rng, n):
    raw = random_hyperhermitian(rng, n)
    low = float(np.linalg.eigvalsh(realize(raw.components))[0])
    comp = raw.components.copy()
    comp[np.arange(n), np.arange(n), 0] += abs(low) * 1.5 + 0.5
    return HyperHermitian(comp)


def _fold(name, seed, rows):
    # argmin of margin + tol keeps the fold failing iff any member fails
    best = min(range(len(rows)), key=lambda i: rows[i].margin + rows[i].tol)
    r = rows[best]
    loc = r.location if r.location is not None else best
    return CheckReport(
        name=name,
        margin=r.margin,
        tol=r.tol,
        samples=sum(x.samples for x in rows),
        seed=seed,
        location=loc,
    )


def _rel(lhs, rhs):
    return abs(lhs - rhs) / (max(abs(lhs), abs(rhs)) + 1.0)


def suite_algebra(seed, trials):
    rng = np.random.default_rng(seed)
    cong, real_rows, embed, closed = [], [], [], []
    for i in range(trials):
        n = 1 + i % 4
        A = random_hyperhermitian(rng, n)
        C = rng.normal(size=(n, n, 4))
        lhs = moore_det(congruence(A.components, C).components)
        rhs = moore_det(A) * moore_det(qmat_mul(qmat_adjoint(C), C))
        cong.append(CheckReport("congruence_det", -_rel(lhs, rhs), 1e-9))
        det_r = float(np.linalg.det(realize(A.components)))
        m4 = moore_det(A) ** 4
        real_rows.append(CheckReport("realization_det", -_rel(det_r, m4), 1e-8))
        re_part = rng.normal(size=(n, n))
        im_part = rng.normal(size=(n, n))
        H = re_part + re_part.T + 1j * (im_part - im_part.T)
        comp = np.zeros((n, n, 4))
        comp[..., 0] = H.real
        comp[..., 1] = H.imag
        md = moore_det(comp)
        cd = float(np.linalg.det(H).real)
        embed.append(CheckReport("complex_embedding", -_rel(md, cd), 1e-10))
        A2 = random_hyperhermitian(rng, 2)
        c2 = moore_det(A2, method="closed")
        e2 = moore_det(A2, method="eig")
        closed.append(CheckReport("closed_form_2x2", -_rel(c2, e2), 1e-12))
    m_trials = max(1, 2 * trials // 5)
    sym, lin, col, pos = [], [], [], []
    for i in range(m_trials):
        n = 1 + i % 3
        mats = [random_hyperhermitian(rng, n) for _ in range(n)]
        base = mixed_det(*mats)
        perm = rng.permutation(n)
        shuf = mixed_det(*[mats[j] for j in perm])
        sym.append(CheckReport("mixed_symmetry", -_rel(base, shuf), 1e-9))
        al, be = float(rng.normal()), float(rng.normal())
        Ax = random_hyperhermitian(rng, n)
        Bx = random_hyperhermitian(rng, n)
        mix = HyperHermitian(al * Ax.components + be * Bx.components)
        lhs = mixed_det(mix, *mats[1:])
        rhs = al * mixed_det(Ax, *mats[1:]) + be * mixed_det(Bx, *mats[1:])
        lin.append(CheckReport("mixed_multilinearity", -_rel(lhs, rhs), 1e-9))
        col.append(
            CheckReport(
                "mixed_collapse", -_rel(mixed_det(*([mats[0]] * n)), moore_det(mats[0])), 1e-9
            )
        )
        val = mixed_det(*[_shifted_random(rng, n) for _ in range(n)])
        pos.append(CheckReport("mixed_positivity", val, 1e-9 * (abs(val) + 1.0)))
    return [
        _fold("congruence_det", seed, cong),
        _fold("realization_det", seed, real_rows),
        _fold("complex_embedding", seed, embed),
        _fold("closed_form_2x2", seed, closed),
        _fold("mixed_symmetry", seed, sym),
        _fold("mixed_multilinearity", seed, lin),
        _fold("mixed_collapse", seed, col),
        _fold("mixed_positivity", seed, pos),
    ]


_SLICE_TERMS = TrigPoly(
    [
        ((1, 0, 0, 0, 0, 0, 0, 0), 0.03, -0.02),
        ((0, 0, 0, 0, 2, 0, 0, 0), 0.04, 0.01),
        ((1, 0, 0, 0, 1, 0, 0, 0), -0.03, 0.02),
    ]
)


def suite_calculus(seed, trials):
    rng = np.random.default_rng(seed)
    g = Grid(2, (8, 8, 1, 1, 8, 8, 1, 1))
    rows = []

    u = sample_trigpoly(_random_trig(rng, g, nterms=5, kmax=1, amp=1e-4), g)
    sub = []
    for s, t in [(0, 1), (0, 4), (1, 5), (4, 5), (0, 5)]:
        one = partial(partial(u, s, scheme="spectral"), t, scheme="spectral").values
        two = partial(partial(u, t, scheme="spectral"), s, scheme="spectral").values
        d = float(np.abs(one - two).max())
        sc = float(max(np.abs(one).max(), np.abs(two).max())) + 1.0
        sub.append(CheckReport("hess_symmetry", -d, 1e-10 * sc, g.npoints))
    rows.append(_fold("hess_symmetry", seed, sub))

    # data varying only along the real axes embeds the real Hessian in the
    # leading component and zeroes the imaginary ones
    from .torus_field import hess_H

    us = sample_trigpoly(_SLICE_TERMS, g)
    H = hess_H(us, "spectral").components
    sc = float(np.abs(H).max()) + 1.0
    worst = float(np.abs(H[..., :, :, 1:]).max())
    for i, j in [(0, 0), (0, 1), (1, 1)]:
        want = partial(partial(us, 4 * i, scheme="spectral"), 4 * j, scheme="spectral").values
        worst = max(worst, float(np.abs(H[..., i, j, 0] - want).max()))
    rows.append(
        CheckReport("real_slice_embedding", -worst, 1e-10 * sc, g.npoints, seed)
    )

    glrho = _random_trig(rng, g, nterms=4, kmax=1, amp=0.5)
    qid = np.zeros((2, 2, 4))
    qid[np.arange(2), np.arange(2), 0] = 1.0
    P = np.zeros((2, 2, 4))
    P[0, 1, 0] = 1.0
    P[1, 0, 0] = 1.0
    D = qid.copy()
    D[0, 0] = np.array([0.5, 0.5, 0.5, 0.5])
    a_unit = np.array([1.0, 2.0, 2.0, 0.0]) / 3.0
    for name, mat, right in [
        ("gl_identity", qid, None),
        ("gl_permutation", P, None),
        ("gl_diag_unit", D, None),
        ("gl_right_mult", qid, a_unit),
    ]:
        r = check_gl_transform(glrho, g, mat, right_unit=right, samples=32, seed=seed)
        rows.append(replace(r, name=name, seed=seed))

    U, _, _ = random_field(rng, g, nterms=4, kmax=1, amp=5e-6)
    sub = []
    act = g.active
    for ai in range(len(act)):
        for bi in range(ai, len(act)):
            sub.append(check_logdet_identity(U, act[ai], act[bi], scheme="spectral"))
    rows.append(_fold("logdet_identity", seed, sub))

    rows.append(
        replace(check_divergence(U, scheme="spectral"), name="divergence_spectral", seed=seed)
    )
    gs = Grid(2, (8, 1, 1, 1, 8, 1, 1, 1))
    Us, _ = positive_hessian_field(_SLICE_TERMS, gs)
    rows.append(
        replace(
            check_divergence(Us, scheme="spectral"), name="divergence_real_slice", seed=seed
        )
    )
    # per-axis frequency magnitudes must differ between terms: on data whose
    # nonzero |k| all agree, the centered stencil is divergence free to
    # roundoff and no order can be read off
    rho_fd = TrigPoly(
        [
            (k, rng.normal() * 1e-3, rng.normal() * 1e-3)
            for k in (
                (2, 0, 0, 0, 1, 0, 0, 0),
                (1, 0, 0, 0, 0, 2, 0, 0),
                (0, 1, 0, 0, 2, 0, 0, 0),
                (0, 2, 0, 0, 0, 1, 0, 0),
            )
        ]
    )
    rows.append(
        replace(
            check_divergence_refinement(rho_fd, g, scheme="fd2"),
            name="divergence_fd2_order",
            seed=seed,
        )
    )

    Uq, _, _ = random_field(rng, g, nterms=4, kmax=1, amp=0.01)
    sub = []
    for _ in range(3):
        h = sample_trigpoly(_random_trig(rng, g, 3, 1, 1.0), g)
        w = sample_trigpoly(_random_trig(rng, g, 3, 1, 1.0), g)
        s1 = integrate(apply_D(Uq, h, "divergence", "spectral"), w)
        s2 = integrate(apply_D(Uq, w, "divergence", "spectral"), h)
        sub.append(CheckReport("apply_d_self_adjoint", -_rel(s1, s2), 1e-8, g.npoints))
    rows.append(_fold("apply_d_self_adjoint", seed, sub))
    return rows


def suite_estimates(seed, trials):
    rng = np.random.default_rng(seed)
    g = Grid(2, (8, 8, 1, 1, 8, 8, 1, 1))
    det_rows = []
    for i in range(trials):
        n = 1 + i % 4
        det_rows.append(check_det_ineq(_shifted_random(rng, n), _shifted_random(rng, n)))
    mix_rows = []
    for i in range(trials):
        n = 1 + i % 3
        mix_rows.append(
            check_mixed_trace(_shifted_random(rng, n), random_hyperhermitian(rng, n))
        )
    quad_rows = []
    for i in range(trials):
        n = 1 + i % 3
        quad_rows.append(
            check_quad_trace(_shifted_random(rng, n), random_hyperhermitian(rng, n))
        )
    rows = [
        _fold("det_ineq", seed, det_rows),
        _fold("mixed_trace", seed, mix_rows),
        _fold("quad_trace", seed, quad_rows),
    ]

    nfields = max(1, trials // 50)
    dir_rows, pog_rows = [], []
    for i in range(nfields):
        U, _ = positive_hessian_field(_random_axis_poly(rng, g, 5, 1e-3), g)
        zvec = rng.normal(size=(2, 4))  # drawn every round to keep the stream fixed
        if i % 3 == 2:
            zeta = zvec / np.sqrt((zvec**2).sum())
        else:
            zeta = np.zeros((2, 4))
            zeta[(i // 3) % 2, 0] = 1.0
        dir_rows.append(check_dir_ineq(U, zeta, scheme="spectral"))
        pog_rows.append(check_pogorelov(U, scheme="spectral"))
    rows.append(_fold("dir_ineq", seed, dir_rows))
    rows.append(_fold("pogorelov", seed, pog_rows))

    npoints = max(1, trials // 25)
    sep = _random_separable(rng, g, amp=0.004)
    crossed = TrigPoly(sep.terms + _random_cross(rng, g, amp=0.003).terms)
    U1, _ = positive_hessian_field(sep, g)
    U2, _ = positive_hessian_field(crossed, g)
    third_rows = []
    for j in range(npoints):
        z = tuple(int(rng.integers(0, N)) if N > 1 else 0 for N in g.sizes)
        third_rows.append(check_third_deriv(U1 if j % 2 == 0 else U2, z, scheme="spectral"))
    rows.append(_fold("third_deriv", seed, third_rows))
    return rows


def run_suite(name, seed, trials=500):
    """Run one named verifier suite; empty list when trials <= 0."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    if trials <= 0:
        return []
    if name == "algebra":
        return suite_algebra(seed, trials)
    if name == "calculus":
        return suite_calculus(seed, trials)
    if name == "estimates":
        return suite_estimates(seed, trials)
    return suite_algebra(seed, trials) + suite_calculus(seed, trials) + suite_estimates(
        seed, trials
    )
