import numpy as np
import pytest

from qma.quat_core import qconj, qmat_mul
from qma.hherm import HyperHermitian
from qma.torus_field import (
    Grid,
    HermitianField,
    RealSymField,
    ScalarField,
    TrigPoly,
    analytic_hess,
    apply_D,
    default_scheme,
    dir_laplace,
    div_form_coeffs,
    hess_H,
    integrate,
    inv_field,
    laplace_G,
    laplace_U,
    min_eig_field,
    moore_det_field,
    partial,
    positive_hessian_field,
    read_qmaf,
    read_qmaf_header,
    sample_trigpoly,
    write_qmaf,
)


def grid1(N=8):
    return Grid(1, [N, N, N, N])


def grid2(N=8):
    return Grid(2, [N, N, 1, 1, N, N, 1, 1])


def cos_axis(g, axis, kfreq=1):
    k = [0] * (4 * g.n)
    k[axis] = kfreq
    return sample_trigpoly(TrigPoly([(k, 1.0, 0.0)]), g)


def random_trig(g, rng, nterms=4, kmax=1, amp=1.0):
    terms = []
    for _ in range(nterms):
        k = np.zeros(4 * g.n, dtype=int)
        for s in g.active:
            k[s] = rng.integers(-kmax, kmax + 1)
        if not k.any():
            k[g.active[0]] = 1
        terms.append((k, amp * rng.normal(), amp * rng.normal()))
    return TrigPoly(terms)


class TestGrid:
    def test_basic(self):
        g = Grid(2, [8, 8, 1, 1, 8, 8, 1, 1], periods=[1, 1, 1, 1, 2, 2, 2, 2])
        assert g.n == 2
        assert g.active == (0, 1, 4, 5)
        assert g.shape == (8, 8, 1, 1, 8, 8, 1, 1)
        assert g.volume == pytest.approx(16.0)
        assert g.spacings[4] == pytest.approx(0.25)
        assert g.npoints == 8 * 8 * 8 * 8

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(1, [8, 8, 8])  # wrong axis count
        with pytest.raises(ValueError):
            Grid(1, [8, 8, 8, 0])
        with pytest.raises(ValueError):
            Grid(1, [8, 8, 8, 8], periods=[1, 1, 1, -1])

    def test_default_scheme(self):
        assert default_scheme(grid1(8)) == "spectral"
        assert default_scheme(grid2(16)) == "spectral"
        assert default_scheme(Grid(1, [6, 6, 6, 6])) == "fd2"
        assert default_scheme(Grid(1, [8, 12, 8, 8])) == "fd2"
        # frozen axes do not block the spectral default
        assert default_scheme(Grid(2, [8, 8, 1, 1, 8, 8, 1, 1])) == "spectral"


class TestScalarField:
    def test_rejects_nonfinite(self):
        g = grid1(4)
        vals = np.zeros(g.shape)
        vals[0, 0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            ScalarField(g, vals)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            ScalarField(grid1(4), np.zeros((4, 4, 4, 5)))

    def test_arithmetic(self):
        g = grid1(4)
        f = ScalarField(g, np.full(g.shape, 2.0))
        h = f + f * 0.5 - f
        assert np.allclose(h.values, 1.0)


class TestSampleTrigpoly:
    def test_empty(self):
        f = sample_trigpoly(TrigPoly([]), grid1(4))
        assert not f.values.any()

    def test_single_cosine(self):
        g = Grid(1, [8, 4, 4, 4], periods=[2.0, 1, 1, 1])
        f = sample_trigpoly(TrigPoly([([1, 0, 0, 0], 1.0, 0.0)]), g)
        x = np.arange(8) * 2.0 / 8
        expect = np.cos(2 * np.pi * x / 2.0)
        assert np.allclose(f.values[:, 0, 0, 0], expect, atol=1e-14)
        assert np.allclose(f.values, f.values[:, :1, :1, :1])

    def test_constant_integrates(self):
        g = Grid(1, [4, 4, 4, 4], periods=[1, 2, 3, 4])
        f = sample_trigpoly(TrigPoly([([0, 0, 0, 0], 1.5, 0.0)]), g)
        assert integrate(f) == pytest.approx(1.5 * 24.0, rel=1e-14)

    def test_aliasing_guard(self):
        g = grid1(8)
        with pytest.raises(ValueError, match="term"):
            sample_trigpoly(TrigPoly([([5, 0, 0, 0], 1.0, 0.0)]), g)
        # frozen axes admit only zero frequency
        g2 = grid2(8)
        k = [0] * 8
        k[2] = 1
        with pytest.raises(ValueError, match="term"):
            sample_trigpoly(TrigPoly([(k, 1.0, 0.0)]), g2)

    def test_term_length_check(self):
        with pytest.raises(ValueError):
            sample_trigpoly(TrigPoly([([1, 0], 1.0, 0.0)]), grid1(8))


class TestPartial:
    def test_constant(self):
        g = grid1(8)
        f = ScalarField(g, np.ones(g.shape))
        for scheme in ("fd2", "fd4", "spectral"):
            for order in (1, 2):
                d = partial(f, 0, order=order, scheme=scheme)
                assert not d.values.any()

    def test_spectral_exact(self):
        g = Grid(1, [8, 4, 4, 4], periods=[2.0, 1, 1, 1])
        f = sample_trigpoly(TrigPoly([([1, 0, 0, 0], 0.0, 1.0)]), g)  # sin
        d = partial(f, 0, order=1, scheme="spectral")
        x = np.arange(8) * 2.0 / 8
        expect = (2 * np.pi / 2.0) * np.cos(2 * np.pi * x / 2.0)
        assert np.abs(d.values[:, 0, 0, 0] - expect).max() < 1e-12 * np.abs(expect).max()
        d2 = partial(f, 0, order=2, scheme="spectral")
        expect2 = -((2 * np.pi / 2.0) ** 2) * np.sin(2 * np.pi * x / 2.0)
        assert np.abs(d2.values[:, 0, 0, 0] - expect2).max() < 1e-12 * np.abs(expect2).max()

    def test_fd2_second_order(self):
        errs = {}
        for N in (8, 16):
            g = Grid(1, [N, 1, 1, 1])
            f = cos_axis(g, 0)
            d = partial(f, 0, order=1, scheme="fd2")
            x = np.arange(N) / N
            exact = -2 * np.pi * np.sin(2 * np.pi * x)
            errs[N] = np.abs(d.values[:, 0, 0, 0] - exact).max()
        ratio = errs[8] / errs[16]
        assert 3.5 < ratio < 4.5

    def test_fd4_fourth_order(self):
        errs = {}
        for N in (8, 16):
            g = Grid(1, [N, 1, 1, 1])
            f = cos_axis(g, 0)
            d = partial(f, 0, order=1, scheme="fd4")
            x = np.arange(N) / N
            exact = -2 * np.pi * np.sin(2 * np.pi * x)
            errs[N] = np.abs(d.values[:, 0, 0, 0] - exact).max()
        ratio = errs[8] / errs[16]
        assert 12.0 < ratio < 18.0

    def test_fd2_second_derivative_stencil(self):
        # compact 3-point: exact symbol -(2-2cos(kh))/h^2 on a pure harmonic
        N = 8
        g = Grid(1, [N, 1, 1, 1])
        f = cos_axis(g, 0)
        d2 = partial(f, 0, order=2, scheme="fd2")
        h = 1.0 / N
        sym = -(2 - 2 * np.cos(2 * np.pi * h)) / h**2
        assert np.abs(d2.values - sym * f.values).max() < 1e-11

    def test_frozen_axis(self):
        g = grid2(8)
        f = cos_axis(g, 0)
        d = partial(f, 2, order=1, scheme="spectral")
        assert not d.values.any()

    def test_too_small(self):
        g = Grid(1, [2, 2, 2, 2])
        f = ScalarField(g, np.zeros(g.shape))
        with pytest.raises(ValueError):
            partial(f, 0, order=1, scheme="fd2")
        g6 = Grid(1, [4, 4, 4, 4])
        with pytest.raises(ValueError):
            partial(ScalarField(g6, np.zeros(g6.shape)), 0, order=1, scheme="fd4")

    def test_spectral_nyquist(self):
        N = 8
        g = Grid(1, [N, 1, 1, 1])
        f = cos_axis(g, 0, kfreq=N // 2)  # alternating +-1
        d1 = partial(f, 0, order=1, scheme="spectral")
        assert np.abs(d1.values).max() < 1e-12
        d2 = partial(f, 0, order=2, scheme="spectral")
        expect = -((2 * np.pi * (N // 2)) ** 2) * f.values
        assert np.abs(d2.values - expect).max() < 1e-9


class TestHess:
    def test_constant(self):
        g = grid1(8)
        H = hess_H(ScalarField(g, np.full(g.shape, 3.0)))
        assert not H.components.any()

    def test_linear_interior_fd2(self):
        # a linear function is not periodic, but fd2 stencils are local:
        # away from the wrap band the composed Hessian vanishes
        N = 12
        g = Grid(1, [N, N, 1, 1])
        x0 = np.arange(N).reshape(N, 1, 1, 1) / N
        x1 = np.arange(N).reshape(1, N, 1, 1) / N
        vals = np.broadcast_to(0.7 * x0 + 1.3 * x1, g.shape).copy()
        H = hess_H(ScalarField(g, vals), scheme="fd2")
        core = H.components[3 : N - 3, 3 : N - 3]
        assert np.abs(core).max() < 1e-12

    def test_single_coordinate_cosine(self):
        g = grid1(8)
        u = cos_axis(g, 0)
        H = hess_H(u, scheme="spectral")
        expect = -((2 * np.pi) ** 2) * u.values
        assert np.abs(H.components[..., 0, 0, 0] - expect).max() < 1e-9
        other = H.components.copy()
        other[..., 0, 0, 0] = 0.0
        assert np.abs(other).max() < 1e-9

    def test_hyperhermitian_pointwise(self):
        g = grid2(8)
        rng = np.random.default_rng(3)
        u = sample_trigpoly(random_trig(g, rng), g)
        H = hess_H(u, scheme="spectral").components
        defect = np.abs(H - qconj(np.swapaxes(H, -3, -2))).max()
        assert defect <= 1e-11 * max(np.abs(H).max(), 1.0)
        # diagonal entries are real
        for i in range(2):
            assert np.abs(H[..., i, i, 1:]).max() <= 1e-11 * max(np.abs(H).max(), 1.0)

    def test_diagonal_is_axis_laplacian(self):
        g = grid1(8)
        rng = np.random.default_rng(4)
        u = sample_trigpoly(random_trig(g, rng), g)
        H = hess_H(u, scheme="spectral")
        lap = np.zeros(g.shape)
        for p in range(4):
            lap += partial(partial(u, p, scheme="spectral"), p, scheme="spectral").values
        assert np.abs(H.components[..., 0, 0, 0] - lap).max() < 1e-10 * (1 + np.abs(lap).max())

    def test_real_slice_matches_real_hessian(self):
        # data on the real parts only: quaternionic Hessian = real Hessian
        g = Grid(2, [8, 1, 1, 1, 8, 1, 1, 1])
        terms = [
            (np.array([1, 0, 0, 0, 1, 0, 0, 0]), 0.8, 0.0),
            (np.array([1, 0, 0, 0, 0, 0, 0, 0]), 0.0, 0.5),
            (np.array([0, 0, 0, 0, 1, 0, 0, 0]), -0.4, 0.3),
        ]
        u = sample_trigpoly(TrigPoly(terms), g)
        H = hess_H(u, scheme="spectral").components
        scale = max(np.abs(H).max(), 1.0)
        axes = (0, 4)
        for a in range(2):
            for b in range(2):
                dda = partial(partial(u, axes[a], scheme="spectral"), axes[b], scheme="spectral")
                assert np.abs(H[..., a, b, 0] - dda.values).max() <= 1e-10 * scale
        assert np.abs(H[..., 1:]).max() <= 1e-10 * scale

    def test_swap_covariance(self):
        # relabeling the two quaternionic coordinates conjugates the Hessian
        g = grid2(8)
        rng = np.random.default_rng(5)
        u = sample_trigpoly(random_trig(g, rng), g)
        perm = (4, 5, 6, 7, 0, 1, 2, 3)
        u2 = ScalarField(g, np.transpose(u.values, perm).copy())
        H1 = hess_H(u, scheme="spectral").components
        H2 = hess_H(u2, scheme="spectral").components
        expected = np.transpose(H1, perm + (8, 9, 10))[..., ::-1, ::-1, :]
        assert np.abs(H2 - expected).max() < 1e-12 * max(np.abs(H1).max(), 1.0)


class TestAnalyticHess:
    def test_matches_spectral_on_band_limited(self):
        g = grid2(8)
        rng = np.random.default_rng(6)
        p = random_trig(g, rng)
        u = sample_trigpoly(p, g)
        H_num = hess_H(u, scheme="spectral").components
        H_ana = analytic_hess(p, g).components
        scale = max(np.abs(H_ana).max(), 1.0)
        assert np.abs(H_num - H_ana).max() < 1e-10 * scale


class TestLaplacians:
    def test_laplace_constant(self):
        g = grid1(8)
        f = ScalarField(g, np.full(g.shape, 2.0))
        assert not laplace_G(f).values.any()

    def test_laplace_cosine(self):
        g = grid1(8)
        u = cos_axis(g, 0)
        out = laplace_G(u, scheme="spectral")
        expect = -((2 * np.pi) ** 2) * u.values
        assert np.abs(out.values - expect).max() < 1e-9

    def test_laplace_integrates_to_zero(self):
        g = grid1(8)
        rng = np.random.default_rng(7)
        u = sample_trigpoly(random_trig(g, rng), g)
        out = laplace_G(u, scheme="spectral")
        assert abs(integrate(out)) < 1e-10 * (1 + np.abs(out.values).max())

    def test_laplace_G_identity_matches_dirsum(self):
        g = grid1(8)
        rng = np.random.default_rng(8)
        u = sample_trigpoly(random_trig(g, rng), g)
        lap = laplace_G(u, scheme="spectral").values
        acc = np.zeros(g.shape)
        zeta = np.zeros((1, 4))
        zeta[0, 0] = 1.0
        acc += dir_laplace(u, zeta, scheme="spectral").values
        assert np.abs(acc - lap).max() < 1e-10 * (1 + np.abs(lap).max())

    def test_laplace_singular_reports_point(self):
        g = grid2(4)
        G = HermitianField.constant(g, HyperHermitian.from_diagonal([1.0, 1.0]))
        comp = G.components.copy()
        comp[0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0] = 0.0
        Gbad = HermitianField(g, comp)
        u = cos_axis(g, 0)
        with pytest.raises(ValueError, match=r"\(0, 0, 0, 0, 0, 0, 0, 0\)"):
            laplace_G(u, Gbad)

    def test_laplace_U_phi_identity(self):
        # with U = G0 + hess(phi): trace(U^-1 hess phi) = n - trace(U^-1 G0)
        g = grid2(8)
        rng = np.random.default_rng(9)
        G0, _ = positive_hessian_field(random_trig(g, rng, amp=0.5), g)
        phi = sample_trigpoly(random_trig(g, rng, amp=0.05), g)
        Hphi = hess_H(phi, scheme="spectral")
        U = HermitianField(g, G0.components + Hphi.components)
        lhs = laplace_U(phi, U, scheme="spectral").values
        Uinv = inv_field(U)
        tr = np.einsum("...ikc,...ikc->...", Uinv.components, G0.components)
        rhs = 2.0 - tr
        assert np.abs(lhs - rhs).max() < 1e-9 * (1 + np.abs(rhs).max())


class TestDirLaplace:
    def test_basis_vector(self):
        g = grid2(8)
        rng = np.random.default_rng(10)
        u = sample_trigpoly(random_trig(g, rng), g)
        zeta = np.zeros((2, 4))
        zeta[0, 0] = 1.0
        out = dir_laplace(u, zeta, scheme="spectral").values
        expect = np.zeros(g.shape)
        for p in range(4):
            expect += partial(partial(u, p, scheme="spectral"), p, scheme="spectral").values
        assert np.abs(out - expect).max() < 1e-10 * (1 + np.abs(expect).max())

    def test_orthogonal_direction(self):
        g = grid2(8)
        u = cos_axis(g, 0)  # depends on first quaternionic coordinate only
        zeta = np.zeros((2, 4))
        zeta[1, 0] = 1.0
        out = dir_laplace(u, zeta, scheme="spectral").values
        assert np.abs(out).max() < 1e-10

    def test_unit_vectors_sum(self):
        g = grid2(8)
        rng = np.random.default_rng(11)
        u = sample_trigpoly(random_trig(g, rng), g)
        acc = np.zeros(g.shape)
        for i in range(2):
            zeta = np.zeros((2, 4))
            zeta[i, 0] = 1.0
            acc += dir_laplace(u, zeta, scheme="spectral").values
        lap = laplace_G(u, scheme="spectral").values
        assert np.abs(acc - lap).max() < 1e-10 * (1 + np.abs(lap).max())

    def test_nonunit_rejected(self):
        g = grid2(4)
        u = ScalarField(g, np.zeros(g.shape))
        zeta = np.zeros((2, 4))
        zeta[0, 0] = 1.1
        with pytest.raises(ValueError):
            dir_laplace(u, zeta)


class TestFieldHelpers:
    def test_moore_closed_vs_eig(self):
        g = grid2(4)
        rng = np.random.default_rng(12)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        d_closed = moore_det_field(U, method="closed").values
        d_eig = moore_det_field(U, method="eig").values
        assert np.abs(d_closed - d_eig).max() <= 1e-10 * (1 + np.abs(d_eig).max())

    def test_min_eig_field(self):
        g = grid2(4)
        rng = np.random.default_rng(13)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        m2 = min_eig_field(U).values
        # against the realization route
        from qma.quat_core import realize

        w = np.linalg.eigvalsh(realize(U.components))
        assert np.abs(m2 - w[..., 0]).max() < 1e-10 * (1 + np.abs(w).max())
        assert m2.min() > 0

    def test_inv_field(self):
        g = grid2(4)
        rng = np.random.default_rng(14)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        Uinv = inv_field(U)
        prod = qmat_mul(Uinv.components, U.components)
        ident = np.zeros_like(prod)
        ident[..., 0, 0, 0] = 1.0
        ident[..., 1, 1, 0] = 1.0
        assert np.abs(prod - ident).max() < 1e-10

    def test_positive_hessian_field_margin(self):
        g = grid2(8)
        rng = np.random.default_rng(15)
        rho = random_trig(g, rng, amp=0.7)
        U, c = positive_hessian_field(rho, g)
        Hrho = analytic_hess(rho, g)
        worst = min_eig_field(Hrho).values.min()
        assert c == pytest.approx(1.5 * abs(worst) + 1.0, rel=1e-12)
        assert min_eig_field(U).values.min() >= 0.5 * abs(worst) + 1.0 - 1e-9


class TestDivForm:
    def test_identity_coeffs(self):
        g = grid2(4)
        U = HermitianField.constant(g, HyperHermitian.identity(2))
        a = div_form_coeffs(U).matrices
        expect = np.zeros(g.shape + (8, 8))
        expect[..., np.arange(8), np.arange(8)] = 1.0
        assert np.abs(a - expect).max() < 1e-12

    def test_n1_cancellation(self):
        g = grid1(8)
        rng = np.random.default_rng(16)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.5), g)
        a = div_form_coeffs(U).matrices
        expect = np.zeros(g.shape + (4, 4))
        expect[..., np.arange(4), np.arange(4)] = 1.0
        assert np.abs(a - expect).max() < 1e-12

    def test_symmetric_exactly(self):
        g = grid2(4)
        rng = np.random.default_rng(17)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        a = div_form_coeffs(U).matrices
        assert np.array_equal(a, np.swapaxes(a, -1, -2))

    def test_contraction_matches_trace_route(self):
        # sum_st a_st (D_s D_t h) = det U * Re tr(U^-1 hess h) pointwise
        g = grid2(8)
        rng = np.random.default_rng(18)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        h = sample_trigpoly(random_trig(g, rng), g)
        a = div_form_coeffs(U).matrices
        H2 = np.zeros(g.shape + (8, 8))
        for s in g.active:
            ds = partial(h, s, scheme="spectral")
            for t in g.active:
                H2[..., s, t] = partial(ds, t, scheme="spectral").values
        lhs = np.einsum("...st,...st->...", a, H2)
        detU = moore_det_field(U).values
        tr = np.einsum("...ikc,...ikc->...", inv_field(U).components, hess_H(h, scheme="spectral").components)
        rhs = detU * tr
        assert np.abs(lhs - rhs).max() <= 1e-9 * (1 + np.abs(rhs).max())

    def test_apply_D_constant(self):
        g = grid2(4)
        rng = np.random.default_rng(19)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.3), g)
        h = ScalarField(g, np.full(g.shape, 5.0))
        for form in ("trace", "divergence"):
            out = apply_D(U, h, form=form)
            assert np.abs(out.values).max() < 1e-12

    def test_apply_D_identity_background(self):
        g = grid1(8)
        U = HermitianField.constant(g, HyperHermitian.identity(1))
        rng = np.random.default_rng(20)
        h = sample_trigpoly(random_trig(g, rng), g)
        lap = laplace_G(h, scheme="spectral").values
        for form in ("trace", "divergence"):
            out = apply_D(U, h, form=form, scheme="spectral").values
            assert np.abs(out - lap).max() < 1e-9 * (1 + np.abs(lap).max())

    def test_self_adjoint_divergence_form(self):
        g = grid2(8)
        rng = np.random.default_rng(21)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        h1 = sample_trigpoly(random_trig(g, rng), g)
        h2 = sample_trigpoly(random_trig(g, rng), g)
        d1h = apply_D(U, h1, form="divergence", scheme="spectral")
        d2h = apply_D(U, h2, form="divergence", scheme="spectral")
        lhs = integrate(d1h, h2)
        rhs = integrate(d2h, h1)
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))

    def test_divergence_free_coeffs_spectral(self):
        rng = np.random.default_rng(22)
        rho = None
        norms = {}
        for N in (8, 16):
            g = grid2(N)
            if rho is None:
                rho = random_trig(g, rng, amp=0.3)
            U, _ = positive_hessian_field(rho, g)
            a = div_form_coeffs(U).matrices
            worst = 0.0
            for t in g.active:
                acc = np.zeros(g.shape)
                for s in g.active:
                    acc += partial(ScalarField(g, a[..., s, t]), s, scheme="spectral").values
                worst = max(worst, np.abs(acc).max())
            norms[N] = worst
        assert norms[16] <= max(norms[8] / 8.0, 1e-11)

    def test_divergence_free_coeffs_fd2(self):
        rng = np.random.default_rng(23)
        rho = None
        norms = {}
        for N in (8, 16):
            g = grid2(N)
            if rho is None:
                rho = random_trig(g, rng, amp=0.3)
            U, _ = positive_hessian_field(rho, g)
            a = div_form_coeffs(U).matrices
            worst = 0.0
            for t in g.active:
                acc = np.zeros(g.shape)
                for s in g.active:
                    acc += partial(ScalarField(g, a[..., s, t]), s, scheme="fd2").values
                worst = max(worst, np.abs(acc).max())
            norms[N] = worst
        assert norms[16] <= max(norms[8] / 2.8, 1e-11)


class TestIntegrate:
    def test_volume(self):
        g = Grid(1, [4, 4, 4, 4], periods=[1, 2, 1, 2])
        one = ScalarField(g, np.ones(g.shape))
        assert integrate(one) == pytest.approx(4.0, rel=1e-14)

    def test_cosine_zero(self):
        g = grid1(8)
        f = cos_axis(g, 0)
        assert abs(integrate(f)) < 1e-12

    def test_cos_squared(self):
        g = grid1(8)
        f = cos_axis(g, 0)
        sq = ScalarField(g, f.values**2)
        assert integrate(sq) == pytest.approx(0.5, rel=1e-12)
        assert integrate(f, f) == pytest.approx(0.5, rel=1e-12)

    def test_grid_mismatch(self):
        f1 = ScalarField(grid1(4), np.zeros((4, 4, 4, 4)))
        f2 = ScalarField(grid1(8), np.zeros((8, 8, 8, 8)))
        with pytest.raises(ValueError):
            integrate(f1, f2)


class TestQMAF:
    def test_scalar_roundtrip(self, tmp_path):
        g = Grid(1, [4, 6, 2, 2], periods=[1.0, 2.0, 0.5, 1.5])
        rng = np.random.default_rng(24)
        f = ScalarField(g, rng.normal(size=g.shape))
        path = tmp_path / "f.qmaf"
        write_qmaf(path, f)
        back = read_qmaf(path)
        assert isinstance(back, ScalarField)
        assert back.grid.sizes == g.sizes
        assert back.grid.periods == g.periods
        assert np.array_equal(back.values, f.values)

    def test_hermitian_roundtrip(self, tmp_path):
        g = grid2(4)
        rng = np.random.default_rng(25)
        U, _ = positive_hessian_field(random_trig(g, rng, amp=0.4), g)
        path = tmp_path / "U.qmaf"
        write_qmaf(path, U)
        back = read_qmaf(path)
        assert isinstance(back, HermitianField)
        assert np.array_equal(back.components, U.components)

    def test_header_layout(self, tmp_path):
        import json
        import struct

        g = Grid(1, [4, 4, 4, 4])
        f = ScalarField(g, np.zeros(g.shape))
        path = tmp_path / "h.qmaf"
        write_qmaf(path, f)
        raw = path.read_bytes()
        assert raw[:4] == b"QMAF"
        assert raw[4] == 0x01
        hlen = struct.unpack("<I", raw[5:9])[0]
        header = json.loads(raw[9 : 9 + hlen].decode("utf-8"))
        assert header["n"] == 1
        assert header["sizes"] == [4, 4, 4, 4]
        assert header["kind"] == "scalar"
        assert header["dtype"] == "f64le"
        assert header["order"] == "row-major-axis0-slowest"
        assert len(raw) == 9 + hlen + 8 * g.npoints
        got = read_qmaf_header(path)
        assert got == header

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.qmaf"
        path.write_bytes(b"NOPE" + bytes(16))
        with pytest.raises(ValueError):
            read_qmaf(path)
