"""Problem configurations: JSON schema parsing and bundled generators.

A config is a plain dict (JSON object) naming the grid, the right-hand
exponent f, the background G0 = c*Id + hess(rho), and solver overrides.
f comes either as explicit trig data or as log_det_ratio_phi, which
manufactures f from a reference potential so the continuum solution is
known exactly.  Backgrounds are built with the solve scheme's Hessian so
the discrete problem is the one the solver actually iterates on, while
manufactured f uses analytic Hessians and therefore stays the same
function of the torus at every resolution.
"""

from dataclasses import dataclass

import numpy as np

from .ma_solver import ConfigError, Problem, PositivityError, SolverConfig
from .torus_field import (
    Grid,
    HermitianField,
    ScalarField,
    TrigPoly,
    analytic_hess,
    hess_H,
    min_eig_field,
    moore_det_field,
    sample_trigpoly,
    _mineig_comp,
    _moore_comp,
    _resolve_scheme,
)

__all__ = [
    "ParsedConfig",
    "make_manufactured2",
    "make_poisson1",
    "make_random",
    "make_slice2d",
    "parse_config",
    "poisson_oracle",
]

_TOP_KEYS = {"n", "sizes", "periods", "f", "G0", "solver"}
_G0_KEYS = {"C", "c", "rho"}
_F_KEYS = {"trig", "log_det_ratio_phi"}
_SOLVER_KEY_MAP = {
    "tol": "tol_residual",
    "max_newton": "max_newton",
    "continuity_steps": "continuity_steps",
    "eps_pos": "eps_pos",
    "scheme": "scheme",
    "cg_tol": "cg_tol",
    "cg_max": "cg_max",
}


@dataclass(frozen=True)
class ParsedConfig:
    problem: Problem
    solver: SolverConfig
    phi_star: TrigPoly


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _trig_terms(spec, nax, what):
    _require(isinstance(spec, list), f"{what}: expected a list of terms")
    terms = []
    for i, term in enumerate(spec):
        _require(isinstance(term, dict), f"{what} term {i}: expected an object")
        unknown = set(term) - {"k", "cos", "sin"}
        _require(not unknown, f"{what} term {i}: unknown keys {sorted(unknown)}")
        k = term.get("k")
        _require(
            isinstance(k, (list, tuple)) and len(k) == nax,
            f"{what} term {i}: k must be a list of length {nax}",
        )
        terms.append((k, float(term.get("cos", 0.0)), float(term.get("sin", 0.0))))
    try:
        return TrigPoly(terms)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what}: {e}") from None


def parse_config(cfg):
    """Validate a config dict and build (Problem, SolverConfig, phi_star)."""
    _require(isinstance(cfg, dict), "config must be a JSON object")
    unknown = set(cfg) - _TOP_KEYS
    _require(not unknown, f"unknown config keys {sorted(unknown)}")
    for key in ("n", "sizes", "f", "G0"):
        _require(key in cfg, f"missing required config key {key!r}")

    n = cfg["n"]
    _require(isinstance(n, int) and n >= 1, "n must be a positive integer")
    sizes = cfg["sizes"]
    _require(
        isinstance(sizes, (list, tuple)) and len(sizes) == 4 * n,
        f"sizes must list 4n = {4 * n} entries",
    )
    periods = cfg.get("periods", [1.0] * (4 * n))
    _require(
        isinstance(periods, (list, tuple)) and len(periods) == 4 * n,
        f"periods must list 4n = {4 * n} entries",
    )
    try:
        grid = Grid(n, sizes, periods)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None

    solver_spec = cfg.get("solver", {})
    _require(isinstance(solver_spec, dict), "solver must be an object")
    unknown = set(solver_spec) - set(_SOLVER_KEY_MAP)
    _require(not unknown, f"unknown solver keys {sorted(unknown)}")
    kwargs = {_SOLVER_KEY_MAP[k]: v for k, v in solver_spec.items()}
    try:
        solver = SolverConfig(**kwargs)
        scheme = _resolve_scheme(grid, solver.scheme)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"solver: {e}") from None

    g0spec = cfg["G0"]
    _require(isinstance(g0spec, dict), "G0 must be an object")
    unknown = set(g0spec) - _G0_KEYS
    _require(not unknown, f"unknown G0 keys {sorted(unknown)}")
    _require(
        g0spec.get("C") == "identity-scaled",
        "G0.C must be the string 'identity-scaled'",
    )
    rho = None
    if "rho" in g0spec:
        rspec = g0spec["rho"]
        _require(
            isinstance(rspec, dict) and set(rspec) == {"trig"},
            "G0.rho must be an object with a single 'trig' key",
        )
        rho = _trig_terms(rspec["trig"], 4 * n, "G0.rho")
    if "c" in g0spec:
        c = g0spec["c"]
        _require(isinstance(c, (int, float)) and c > 0, "G0.c must be a positive number")
        c = float(c)
    elif rho is None:
        c = 1.0
    else:
        try:
            worst = float(min_eig_field(analytic_hess(rho, grid)).values.min())
        except ValueError as e:
            raise ConfigError(f"G0.rho: {e}") from None
        c = 1.5 * abs(worst) + 1.0

    try:
        comp = np.zeros(grid.shape + (n, n, 4))
        idx = np.arange(n)
        comp[..., idx, idx, 0] = c
        if rho is not None:
            comp = comp + hess_H(sample_trigpoly(rho, grid), scheme=scheme).components
        G0 = HermitianField(grid, comp)
    except ValueError as e:
        raise ConfigError(f"G0: {e}") from None

    fspec = cfg["f"]
    _require(isinstance(fspec, dict), "f must be an object")
    _require(
        set(fspec) <= _F_KEYS and len(fspec) == 1,
        f"f must specify exactly one of {sorted(_F_KEYS)}",
    )
    phi_star = None
    if "trig" in fspec:
        fpoly = _trig_terms(fspec["trig"], 4 * n, "f")
        try:
            f_field = sample_trigpoly(fpoly, grid)
        except ValueError as e:
            raise ConfigError(f"f: {e}") from None
    else:
        inner = fspec["log_det_ratio_phi"]
        _require(
            isinstance(inner, dict) and set(inner) == {"trig"},
            "f.log_det_ratio_phi must be an object with a single 'trig' key",
        )
        phi_star = _trig_terms(inner["trig"], 4 * n, "f.log_det_ratio_phi")
        try:
            base = np.zeros(grid.shape + (n, n, 4))
            base[..., idx, idx, 0] = c
            if rho is not None:
                base = base + analytic_hess(rho, grid).components
            target = base + analytic_hess(phi_star, grid).components
        except ValueError as e:
            raise ConfigError(f"f.log_det_ratio_phi: {e}") from None
        for name, comp_k in (("background", base), ("target", target)):
            if float(_mineig_comp(comp_k).min()) <= 0.0:
                raise ConfigError(f"manufactured {name} is not positive definite")
        f_field = ScalarField(grid, np.log(_moore_comp(target) / _moore_comp(base)))

    try:
        problem = Problem(grid, f_field, G0)
    except PositivityError as e:
        raise ConfigError(str(e)) from None
    return ParsedConfig(problem=problem, solver=solver, phi_star=phi_star)


def _random_terms(rng, n, active, nterms, kmax, amp):
    out = []
    for _ in range(nterms):
        k = [0] * (4 * n)
        for s in active:
            k[s] = int(rng.integers(-kmax, kmax + 1))
        if not any(k):
            k[active[0]] = 1
        out.append(
            {"k": k, "cos": float(amp * rng.normal()), "sin": float(amp * rng.normal())}
        )
    return out


def _shift_constant(rho_terms, n, ref_sizes):
    # evaluated on a fixed fine lattice so c does not depend on the run size
    g = Grid(n, ref_sizes)
    rho = TrigPoly([(t["k"], t["cos"], t["sin"]) for t in rho_terms])
    worst = float(min_eig_field(analytic_hess(rho, g)).values.min())
    return 1.5 * abs(worst) + 1.0


def make_poisson1(seed=0, size=16):
    """n = 1 problem on a size^4 grid; the equation is linear."""
    rng = np.random.default_rng(seed)
    active = (0, 1, 2, 3)
    rho = _random_terms(rng, 1, active, nterms=4, kmax=1, amp=0.2)
    f = _random_terms(rng, 1, active, nterms=4, kmax=2, amp=0.3)
    return {
        "n": 1,
        "sizes": [size] * 4,
        "periods": [1.0] * 4,
        "f": {"trig": f},
        "G0": {"C": "identity-scaled", "c": _shift_constant(rho, 1, (16, 16, 16, 16)), "rho": {"trig": rho}},
        "solver": {"scheme": "spectral"},
    }


def make_manufactured2(seed=5, size=8, scheme="spectral"):
    """n = 2 problem with a known solution baked into f."""
    rng = np.random.default_rng(seed)
    active = (0, 1, 4, 5)
    rho = _random_terms(rng, 2, active, nterms=6, kmax=1, amp=0.01)
    phistar = _random_terms(rng, 2, active, nterms=6, kmax=1, amp=0.008)
    return {
        "n": 2,
        "sizes": [size, size, 1, 1, size, size, 1, 1],
        "periods": [1.0] * 8,
        "f": {"log_det_ratio_phi": {"trig": phistar}},
        "G0": {
            "C": "identity-scaled",
            "c": _shift_constant(rho, 2, (16, 16, 1, 1, 16, 16, 1, 1)),
            "rho": {"trig": rho},
        },
        "solver": {"scheme": scheme},
    }


def make_slice2d(seed=1):
    """n = 2 data varying only along the two real axes.

    kmax stays at 1: on an 8-point axis, frequency-2 data puts determinant
    products right at Nyquist, where the divergence-form Jacobian is a poor
    model of the discrete residual and Newton slows to a crawl.
    """
    rng = np.random.default_rng(seed)
    active = (0, 4)
    rho = _random_terms(rng, 2, active, nterms=3, kmax=1, amp=0.05)
    f = _random_terms(rng, 2, active, nterms=3, kmax=1, amp=0.2)
    return {
        "n": 2,
        "sizes": [8, 1, 1, 1, 8, 1, 1, 1],
        "periods": [1.0] * 8,
        "f": {"trig": f},
        "G0": {
            "C": "identity-scaled",
            "c": _shift_constant(rho, 2, (64, 1, 1, 1, 64, 1, 1, 1)),
            "rho": {"trig": rho},
        },
        "solver": {"scheme": "spectral"},
    }


def make_random(seed=0, size=8):
    """Generic n = 2 problem with no known solution."""
    rng = np.random.default_rng(seed)
    active = (0, 1, 4, 5)
    rho = _random_terms(rng, 2, active, nterms=6, kmax=1, amp=0.05)
    f = _random_terms(rng, 2, active, nterms=6, kmax=2, amp=0.15)
    return {
        "n": 2,
        "sizes": [size, size, 1, 1, size, size, 1, 1],
        "periods": [1.0] * 8,
        "f": {"trig": f},
        "G0": {
            "C": "identity-scaled",
            "c": _shift_constant(rho, 2, (16, 16, 1, 1, 16, 16, 1, 1)),
            "rho": {"trig": rho},
        },
        "solver": {"scheme": "spectral"},
    }


def poisson_oracle(problem):
    """Direct Fourier solution of the linear n = 1 problem at t = 1.

    Deliberately shares nothing with the Newton path: it divides by its
    own Laplacian symbol instead of running the conjugate-gradient solve,
    so the two routes check each other.
    """
    g = problem.grid
    if g.n != 1:
        raise ValueError("oracle applies to n = 1 problems only")
    g0 = moore_det_field(problem.G0).values
    f = problem.f.values
    A = g0.mean() / (np.exp(f) * g0).mean()
    rhs = A * np.exp(f) * g0 - g0
    lam = np.zeros(g.shape)
    for s in g.active:
        N = g.sizes[s]
        k = (np.fft.fftfreq(N) * N).copy()
        if N % 2 == 0:
            k[N // 2] = 0.0
        shape = [1] * 4
        shape[s] = N
        lam = lam + (-(((2.0 * np.pi / g.periods[s]) * k) ** 2)).reshape(shape)
    fh = np.fft.fftn(rhs, axes=g.active)
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.where(lam < 0, fh / lam, 0.0)
    phi = np.fft.ifftn(ph, axes=g.active).real
    phi = phi - (phi * g0).mean() / g0.mean()
    return ScalarField(g, phi)
