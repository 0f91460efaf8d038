"""Continuity-method solver for the torus Monge-Ampere problem.

The solve marches t from 0 to 1 through a damped Newton iteration at each
stage, warm-starting from the previous stage and halving the t-step when a
stage fails.  The unknown phi is normalized by the det(G0)-weighted mean.

Grid subtlety worth spelling out once: every first-derivative operator here
(all three schemes) has a nontrivial kernel containing the Fourier modes
whose active-axis frequencies all sit in {0, Nyquist}.  The discrete
equation can neither see nor correct those modes, so Newton convergence is
measured on the residual with that kernel projected out.  The reported
final residual carries both the projected and the raw sup-norm; for
band-limited data they coincide at t = 1.
"""

from dataclasses import dataclass

import numpy as np

from .quat_core import realize
from .torus_field import (
    ScalarField,
    SCHEMES,
    apply_D,
    hess_H,
    integrate,
    moore_det_field,
    _adjugate_comp,
    _d1,
    _mineig_comp,
    _moore_comp,
    _resolve_scheme,
    _worst_index,
)

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "ContinuationError",
    "ConvergenceError",
    "PositivityError",
    "Problem",
    "SolverConfig",
    "SolverReport",
    "SolverState",
    "compute_A",
    "continuity_solve",
    "kernel_mask",
    "linearized_apply",
    "newton_solve",
    "pogorelov_sup",
    "project_kernel",
    "residual",
]

CSV_HEADER = "stage,t,newton_iter,residual_linf,A,min_eig,pogorelov_sup,alpha"


class ConfigError(ValueError):
    """Malformed or inconsistent problem configuration."""


class PositivityError(RuntimeError):
    """A state that must be positive definite is not."""

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class ConvergenceError(RuntimeError):
    """Newton iteration failed to reach tolerance."""


class ContinuationError(ConvergenceError):
    """The t-march could not advance even at the minimum step."""


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-9
    max_newton: int = 30
    continuity_steps: int = 8
    eps_pos: float = 1e-6
    cg_tol: float = 1e-12
    cg_max: int = 8000
    scheme: str = None
    damping: float = 0.5
    min_step: float = 2.0**-20

    def __post_init__(self):
        if not 0.0 < self.tol_residual < 1.0:
            raise ValueError(f"tol_residual must be in (0, 1), got {self.tol_residual}")
        if self.max_newton < 1:
            raise ValueError(f"max_newton must be >= 1, got {self.max_newton}")
        if self.continuity_steps < 1:
            raise ValueError(f"continuity_steps must be >= 1, got {self.continuity_steps}")
        if self.eps_pos <= 0.0:
            raise ValueError(f"eps_pos must be positive, got {self.eps_pos}")
        if self.cg_tol <= 0.0:
            raise ValueError(f"cg_tol must be positive, got {self.cg_tol}")
        if self.cg_max < 1:
            raise ValueError(f"cg_max must be >= 1, got {self.cg_max}")
        if not 0.0 < self.damping < 1.0:
            raise ValueError(f"damping must be in (0, 1), got {self.damping}")
        if not 0.0 < self.min_step < 1.0:
            raise ValueError(f"min_step must be in (0, 1), got {self.min_step}")
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


class Problem:
    """Equation data: grid, right-hand exponent f, positive background G0."""

    __slots__ = ("grid", "f", "G0", "_detG0")

    def __init__(self, grid, f, G0):
        if f.grid != grid or G0.grid != grid:
            raise ValueError("f and G0 must live on the problem grid")
        m = _mineig_comp(G0.components)
        worst = float(m.min())
        if worst <= 0.0:
            idx = _worst_index(m)
            raise PositivityError(
                f"background is not positive at grid point {idx} (min eigenvalue {worst:.6g})",
                point=idx,
                value=worst,
            )
        self.grid = grid
        self.f = f
        self.G0 = G0
        self._detG0 = None

    @property
    def det_G0(self):
        if self._detG0 is None:
            self._detG0 = moore_det_field(self.G0)
        return self._detG0

    def __repr__(self):
        return f"Problem(grid={self.grid!r})"


@dataclass(frozen=True)
class SolverState:
    phi: ScalarField
    A: float
    t: float


@dataclass(frozen=True)
class SolverReport:
    rows: list
    stages: list
    status: str
    final_residual_linf: float
    final_residual_projected: float
    scheme: str

    def to_csv(self):
        lines = [CSV_HEADER]
        for stage, t, it, rn, A, me, pog, alpha in self.rows:
            lines.append(
                f"{stage},{t:.17g},{it},{rn:.17g},{A:.17g},{me:.17g},{pog:.17g},{alpha:.17g}"
            )
        return "\n".join(lines) + "\n"


def kernel_mask(grid):
    """Boolean mask of the Fourier modes every scheme's gradient kills.

    Along each active axis the first-derivative symbol vanishes at k = 0
    and (for even N) at the Nyquist index; a mode is in the kernel when
    that holds on every axis at once.  Built by index, not by frequency
    value, because fftfreq reports the Nyquist mode as negative.
    """
    m = np.ones(grid.shape, dtype=bool)
    for s in range(4 * grid.n):
        N = grid.sizes[s]
        ok = np.zeros(N, dtype=bool)
        ok[0] = True
        if N % 2 == 0 and N > 1:
            ok[N // 2] = True
        shape = [1] * (4 * grid.n)
        shape[s] = N
        m &= ok.reshape(shape)
    return m


def project_kernel(grid, values, mask=None):
    """Zero the kernel modes of a real grid array (idempotent)."""
    if mask is None:
        mask = kernel_mask(grid)
    fh = np.fft.fftn(values, axes=grid.active)
    fh[mask] = 0.0
    return np.fft.ifftn(fh, axes=grid.active).real


def compute_A(f, G0, t):
    """Normalization constant: integral det G0 over integral e^{t f} det G0."""
    det = moore_det_field(G0)
    weighted = ScalarField(f.grid, np.exp(t * f.values) * det.values)
    return float(integrate(det) / integrate(weighted))


def pogorelov_sup(phi, U):
    """sup of 2 sqrt(Re tr U) - phi, the quantity the a-priori bound controls."""
    if phi.grid != U.grid:
        raise ValueError("grid mismatch")
    idx = np.arange(U.grid.n)
    tr = U.components[..., idx, idx, 0].sum(axis=-1)
    return float((2.0 * np.sqrt(np.maximum(tr, 0.0)) - phi.values).max())


def _check_positive(comp, what):
    m = _mineig_comp(comp)
    worst = float(m.min())
    if worst <= 0.0:
        idx = _worst_index(m)
        raise PositivityError(
            f"{what} at grid point {idx} (min eigenvalue {worst:.6g})",
            point=idx,
            value=worst,
        )
    return worst


def residual(state, problem, scheme=None):
    """Pointwise det(G0 + hess phi) - A e^{t f} det G0 as a scalar field."""
    if state.phi.grid != problem.grid:
        raise ValueError("grid mismatch")
    U = problem.G0 + hess_H(state.phi, scheme=scheme)
    _check_positive(U.components, "positivity lost")
    vals = (
        _moore_comp(U.components)
        - state.A * np.exp(state.t * problem.f.values) * problem.det_G0.values
    )
    return ScalarField(problem.grid, vals)


def linearized_apply(state, problem, psi, scheme=None, form="divergence"):
    """Directional derivative of the determinant at the current state.

    det U * Tr(U^{-1} hess psi); the divergence form is the one the Newton
    step inverts, the trace form is the cross-check route.
    """
    U = problem.G0 + hess_H(state.phi, scheme=scheme)
    _check_positive(U.components, "positivity lost")
    return apply_D(U, psi, form=form, scheme=scheme)


def _laplace_symbol(grid):
    """Fourier symbol of the composed first-derivative flat Laplacian."""
    K2 = np.zeros(grid.shape)
    for s in grid.active:
        N = grid.sizes[s]
        k = (np.fft.fftfreq(N) * N).copy()
        if N % 2 == 0:
            k[N // 2] = 0.0
        w = ((2.0 * np.pi / grid.periods[s]) * k) ** 2
        shape = [1] * (4 * grid.n)
        shape[s] = N
        K2 = K2 + w.reshape(shape)
    return K2


class _Engine:
    """Arrays shared by every stage of one solve."""

    def __init__(self, problem, config):
        g = problem.grid
        self.grid = g
        self.scheme = _resolve_scheme(g, config.scheme)
        self.f = problem.f.values
        self.G0comp = problem.G0.components
        self.detG0 = _moore_comp(self.G0comp)
        self.mean_detG0 = float(self.detG0.mean())
        self.mask = kernel_mask(g)
        self.K2 = _laplace_symbol(g)
        self.diag = np.arange(g.n)

    def hess_plus_G0(self, phi_values):
        H = hess_H(ScalarField(self.grid, phi_values), scheme=self.scheme)
        return self.G0comp + H.components

    def project(self, values):
        return project_kernel(self.grid, values, self.mask)

    def shift_mean(self, phi_values):
        return phi_values - (phi_values * self.detG0).mean() / self.mean_detG0


def _pcg(eng, a, rhs, config):
    """Preconditioned CG on the (negated) divergence-form operator.

    Spectral runs invert the constant-coefficient flat Laplacian in
    frequency space; finite differences fall back to the Jacobi diagonal
    with the mean pinned.  Kernel modes never couple back into the
    residual, so the solution is projected once at the end.
    """
    g, scheme = eng.grid, eng.scheme
    active = g.active

    def apply_op(psi):
        grads = {t: _d1(g, psi, t, scheme) for t in active}
        out = np.zeros(g.shape)
        for s in active:
            flux = np.zeros(g.shape)
            for t in active:
                flux += a[..., s, t] * grads[t]
            out -= _d1(g, flux, s, scheme)
        return out

    if scheme == "spectral":
        cscale = float(np.mean(a[..., active, active]))

        def precond(r):
            rh = np.fft.fftn(r, axes=active)
            with np.errstate(divide="ignore", invalid="ignore"):
                rh = np.where(eng.K2 > 0, rh / (cscale * eng.K2), 0.0)
            rh[eng.mask] = 0.0
            return np.fft.ifftn(rh, axes=active).real

    else:
        diag = np.zeros(g.shape)
        for s in active:
            diag += a[..., s, s] * 2.0 / g.spacings[s] ** 2

        def precond(r):
            z = r / diag
            return z - z.mean()

    x = np.zeros(g.shape)
    r = rhs.copy()
    nb = float(np.linalg.norm(r))
    if nb == 0.0:
        return x
    z = precond(r)
    p = z.copy()
    rz = float((r * z).sum())
    for _ in range(config.cg_max):
        if float(np.linalg.norm(r)) <= config.cg_tol * nb:
            break
        Kp = apply_op(p)
        pKp = float((p * Kp).sum())
        if pKp <= 0.0:
            break  # lost positivity in the metric; hand back the partial step
        al = rz / pKp
        x += al * p
        r -= al * Kp
        z = precond(r)
        rz_new = float((r * z).sum())
        p = z + (rz_new / rz) * p
        rz = rz_new
    return eng.project(x)


def _newton_stage(eng, phi, t, config, stage, rows):
    """Damped Newton at fixed t; one row per accepted step.

    Returns (phi, converged, projected_residual, A, scale).  Acceptance
    needs min-eig >= eps_pos plus a projected-residual decrease, except in
    the endgame (residual below 1e-3 of the stage start) where the plain
    Newton step is taken as long as positivity holds.
    """
    ef = np.exp(t * eng.f)
    efdet = ef * eng.detG0
    r0 = None
    it = 0
    while True:
        A = eng.mean_detG0 / efdet.mean()
        scale = float(np.abs(A * efdet).max())
        Ucomp = eng.hess_plus_G0(phi)
        _check_positive(Ucomp, "positivity lost")
        res = _moore_comp(Ucomp) - A * efdet
        rn = float(np.abs(eng.project(res)).max())
        if r0 is None:
            r0 = rn
        if rn <= config.tol_residual * scale:
            return phi, True, rn, float(A), scale
        if it >= config.max_newton:
            return phi, False, rn, float(A), scale
        a = realize(_adjugate_comp(Ucomp))
        step = _pcg(eng, a, eng.project(res), config)
        alpha = 1.0
        accepted = False
        while alpha >= config.min_step:
            cand = phi + alpha * step
            Un = eng.hess_plus_G0(cand)
            men = float(_mineig_comp(Un).min())
            if men >= config.eps_pos:
                resn = _moore_comp(Un) - A * efdet
                rnn = float(np.abs(eng.project(resn)).max())
                if rnn < rn or rn < 1e-3 * r0:
                    phi = eng.shift_mean(cand)
                    tr = Un[..., eng.diag, eng.diag, 0].sum(axis=-1)
                    pog = float((2.0 * np.sqrt(tr) - phi).max())
                    rows.append((stage, t, it + 1, rnn, float(A), men, pog, alpha))
                    accepted = True
                    break
            alpha *= config.damping
        if not accepted:
            return phi, False, rn, float(A), scale
        it += 1


def newton_solve(state, problem, config):
    """Newton iteration at the state's fixed t; raises if it cannot converge.

    The incoming A is recomputed (it does not depend on phi).  For n = 1
    the equation is linear and a single accepted step lands on the
    solution.
    """
    eng = _Engine(problem, config)
    phi = eng.shift_mean(state.phi.values)
    rows = []
    phi_out, ok, _, A, _ = _newton_stage(eng, phi, state.t, config, 1, rows)
    if not ok:
        raise ConvergenceError("no convergence")
    out = SolverState(phi=ScalarField(problem.grid, phi_out), A=A, t=state.t)
    return out, rows


def continuity_solve(problem, config, phi0=None):
    """March t from 0 to 1, warm-starting each stage from the last.

    A failed stage rolls back and halves the t-step; below 2^-10 of the
    initial step the march gives up.  n = 1 problems are linear at every t,
    so they run as a single stage at t = 1.  f identically zero returns
    the zero solution immediately.
    """
    g = problem.grid
    eng = _Engine(problem, config)
    if phi0 is None:
        phi = np.zeros(g.shape)
    else:
        if phi0.grid != g:
            raise ValueError("grid mismatch")
        phi = eng.shift_mean(phi0.values)

    rows = []
    stages = []

    U0 = eng.hess_plus_G0(phi)
    worst = _check_positive(U0, "initial state is not positive")
    res0 = _moore_comp(U0) - eng.detG0
    rn0 = float(np.abs(eng.project(res0)).max())
    tr0 = U0[..., eng.diag, eng.diag, 0].sum(axis=-1)
    pog0 = float((2.0 * np.sqrt(tr0) - phi).max())
    rows.append((0, 0.0, 0, rn0, 1.0, worst, pog0, 0.0))

    if not problem.f.values.any():
        state = SolverState(phi=ScalarField(g, np.zeros(g.shape)), A=1.0, t=1.0)
        report = SolverReport(
            rows=rows,
            stages=stages,
            status="converged",
            final_residual_linf=0.0,
            final_residual_projected=0.0,
            scheme=eng.scheme,
        )
        return state, report

    dt0 = 1.0 if g.n == 1 else 1.0 / config.continuity_steps
    dt = dt0
    tcur = 0.0
    stage = 0
    A = 1.0
    while tcur < 1.0 - 1e-12:
        tval = min(tcur + dt, 1.0)
        attempt = []
        phi_try, ok, rn, A_stage, scale = _newton_stage(eng, phi, tval, config, stage + 1, attempt)
        if ok:
            stage += 1
            rows.extend(attempt)
            stages.append(
                {
                    "stage": stage,
                    "t": tval,
                    "newton_iters": len(attempt),
                    "residual_projected": rn,
                    "A": A_stage,
                }
            )
            phi = phi_try
            tcur = tval
            A = A_stage
        else:
            dt *= 0.5
            if dt < dt0 / 1024.0:
                err = ContinuationError("continuation stalled")
                err.report = SolverReport(
                    rows=rows,
                    stages=stages,
                    status="stalled",
                    final_residual_linf=float("nan"),
                    final_residual_projected=float("nan"),
                    scheme=eng.scheme,
                )
                raise err

    res = _moore_comp(eng.hess_plus_G0(phi)) - A * np.exp(eng.f) * eng.detG0
    report = SolverReport(
        rows=rows,
        stages=stages,
        status="converged",
        final_residual_linf=float(np.abs(res).max()),
        final_residual_projected=float(np.abs(eng.project(res)).max()),
        scheme=eng.scheme,
    )
    state = SolverState(phi=ScalarField(g, phi), A=A, t=1.0)
    return state, report
