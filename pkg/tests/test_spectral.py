import numpy as np
import pytest

from mbesim.spectral import (
    Field,
    GridSpec,
    VectorField,
    dealias,
    dealias_mask,
    dilate,
    from_spectrum,
    gradient_magnitude,
    joint_norm,
    lp_norm,
    mode_numbers,
    norm_report,
    spectral_divergence,
    spectral_gradient,
    spectral_laplacian,
    spectral_tail_fraction,
    w1p_norm,
)


@pytest.fixture
def grid1d():
    return GridSpec(1, 128, 7.3)


@pytest.fixture
def grid2d():
    return GridSpec(2, 64, 5.0)


def random_field(grid, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return Field(grid, scale * rng.standard_normal(grid.shape))


class TestGridSpec:
    def test_valid(self, grid1d):
        assert grid1d.shape == (128,)
        assert grid1d.spacing == pytest.approx(7.3 / 128)
        assert grid1d.cell_volume == pytest.approx(7.3 / 128)

    @pytest.mark.parametrize("d,n,L", [(3, 64, 1.0), (0, 64, 1.0),
                                       (1, 7, 1.0), (1, 6, 1.0),
                                       (1, 9, 1.0), (1, 64, 0.0),
                                       (1, 64, -2.0)])
    def test_invalid(self, d, n, L):
        with pytest.raises(ValueError):
            GridSpec(d, n, L)

    def test_wavenumber_convention(self, grid1d):
        # modes run over m in [-N/2, N/2) in fftfreq order
        m = mode_numbers(grid1d)[0]
        assert m.min() == -64 and m.max() == 63
        assert m[0] == 0


class TestField:
    def test_rejects_nonfinite(self, grid1d):
        bad = np.zeros(grid1d.shape)
        bad[3] = np.nan
        with pytest.raises(ValueError):
            Field(grid1d, bad)

    def test_rejects_wrong_size(self, grid1d):
        with pytest.raises(ValueError):
            Field(grid1d, np.zeros(100))

    def test_immutable(self, grid1d):
        f = random_field(grid1d)
        with pytest.raises(ValueError):
            f.samples[0] = 1.0
        with pytest.raises(AttributeError):
            f.samples = np.zeros(grid1d.shape)

    def test_round_trip_transform(self, grid2d):
        f = random_field(grid2d, seed=1)
        g = from_spectrum(grid2d, f.spectrum())
        assert lp_norm(f - g, 2) <= 1e-12 * lp_norm(f, 2)


class TestGradient:
    def test_single_mode_exact(self, grid1d):
        L = grid1d.box_length
        f = Field.from_function(grid1d, lambda x: np.sin(2 * np.pi * x / L))
        expected = (2 * np.pi / L) * np.cos(
            2 * np.pi * grid1d.axis_coordinates() / L
        )
        got = spectral_gradient(f).components[0].samples
        assert np.abs(got - expected).max() < 1e-10

    def test_constant_is_zero(self, grid2d):
        f = Field(grid2d, np.full(grid2d.shape, 3.7))
        g = spectral_gradient(f)
        for comp in g.components:
            assert np.abs(comp.samples).max() < 1e-12

    def test_linearity(self, grid1d):
        L = grid1d.box_length
        x = grid1d.axis_coordinates()
        f = Field(grid1d, np.sin(4 * np.pi * x / L) + np.cos(2 * np.pi * x / L))
        expected = (4 * np.pi / L) * np.cos(4 * np.pi * x / L) - (
            2 * np.pi / L
        ) * np.sin(2 * np.pi * x / L)
        got = spectral_gradient(f).components[0].samples
        assert np.abs(got - expected).max() < 1e-10

    def test_rejects_nonfinite_via_constructor(self, grid1d):
        # non-finite samples can never reach the operator
        with pytest.raises(ValueError):
            Field(grid1d, np.full(grid1d.shape, np.inf))


class TestDivergence:
    def test_div_grad_is_laplacian(self, grid2d):
        f = random_field(grid2d, seed=2)
        # band-limit so derivatives are exact
        coeffs = dealias(f.spectrum(), grid2d)
        f = from_spectrum(grid2d, coeffs)
        lhs = spectral_divergence(spectral_gradient(f))
        rhs = spectral_laplacian(f)
        assert lp_norm(lhs - rhs, 2) < 1e-10 * max(1.0, lp_norm(rhs, 2))

    def test_constant_vector_field(self, grid2d):
        comps = tuple(Field(grid2d, np.full(grid2d.shape, c)) for c in (1.0, -2.0))
        out = spectral_divergence(VectorField(comps))
        assert np.abs(out.samples).max() < 1e-12

    def test_zero_mode_annihilated(self, grid2d):
        comps = tuple(Field(grid2d, np.full(grid2d.shape, 5.0)) for _ in range(2))
        v = VectorField(comps)
        out = spectral_divergence(v)
        assert abs(out.spectrum()[0, 0]) < 1e-12

    def test_mismatched_grids_rejected(self, grid2d):
        other = GridSpec(2, 64, 6.0)
        with pytest.raises(ValueError):
            VectorField((Field.zeros(grid2d), Field.zeros(other)))


class TestNorms:
    def test_constant_field_quadrature(self, grid2d):
        c = -2.5
        f = Field(grid2d, np.full(grid2d.shape, c))
        L, d = grid2d.box_length, grid2d.dimension
        for p in (1.0, 2.0, 3.5):
            assert lp_norm(f, p) == pytest.approx(abs(c) * L ** (d / p), rel=1e-12)

    def test_inf_norm_is_max(self, grid1d):
        f = random_field(grid1d, seed=3)
        assert lp_norm(f, np.inf) == np.abs(f.samples).max()

    def test_sine_l2_closed_form(self, grid1d):
        # oracle: int_0^L sin^2(2 pi x / L) dx = L/2
        L = grid1d.box_length
        f = Field.from_function(grid1d, lambda x: np.sin(2 * np.pi * x / L))
        assert lp_norm(f, 2) == pytest.approx(np.sqrt(L / 2), rel=1e-10)

    def test_rejects_p_below_one(self, grid1d):
        with pytest.raises(ValueError):
            lp_norm(random_field(grid1d), 0.5)

    def test_absolute_homogeneity(self, grid2d):
        f = random_field(grid2d, seed=4)
        for p in (1.0, 2.0, 3.0, np.inf):
            assert lp_norm(-3.0 * f, p) == pytest.approx(
                3.0 * lp_norm(f, p), rel=1e-13
            )

    def test_holder_ordering_volume_normalized(self, grid1d):
        f = random_field(grid1d, seed=5)
        L, d = grid1d.box_length, grid1d.dimension
        ps = [1.0, 1.5, 2.0, 3.0, 6.0, 12.0]
        vals = [lp_norm(f, p) / L ** (d / p) for p in ps]
        vals.append(lp_norm(f, np.inf))
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_w1p_at_least_lp(self, grid2d):
        f = random_field(grid2d, seed=6)
        for p in (1.0, 2.0, np.inf):
            assert w1p_norm(f, p) >= lp_norm(f, p)

    def test_joint_norm_is_max(self, grid2d):
        f = random_field(grid2d, seed=7)
        assert joint_norm(f, 2.0) == pytest.approx(
            max(w1p_norm(f, 2.0), w1p_norm(f, np.inf)), rel=1e-12
        )


class TestParseval:
    def test_random_fields(self, grid2d):
        f = random_field(grid2d, seed=8)
        phys = (f.samples**2).sum() * grid2d.cell_volume
        spec = (np.abs(f.spectrum()) ** 2).sum() * grid2d.cell_volume / grid2d.size
        assert phys == pytest.approx(spec, rel=1e-12)


class TestBiharmonicComposition:
    def test_double_div_grad_matches_multiplier(self, grid2d):
        f = from_spectrum(grid2d, dealias(random_field(grid2d, seed=9).spectrum(),
                                          grid2d))
        twice = spectral_divergence(
            spectral_gradient(spectral_divergence(spectral_gradient(f)))
        )
        from mbesim.spectral import k_quartic

        ref = from_spectrum(grid2d, k_quartic(grid2d) * f.spectrum())
        assert lp_norm(twice - ref, 2) < 1e-10 * max(1.0, lp_norm(ref, 2))


class TestDealias:
    def test_identity_on_retained_band(self, grid1d):
        n = grid1d.points_per_axis
        coeffs = np.zeros(grid1d.shape, dtype=complex)
        coeffs[n // 3 - 1] = 1.0 + 2.0j  # inside the band
        out = dealias(coeffs, grid1d)
        assert np.array_equal(out, coeffs)

    def test_high_mode_zeroed(self, grid1d):
        n = grid1d.points_per_axis
        coeffs = np.zeros(grid1d.shape, dtype=complex)
        coeffs[n // 2 - 1] = 1.0  # mode N/2 - 1, outside the band
        out = dealias(coeffs, grid1d)
        assert np.abs(out).max() == 0.0

    def test_white_noise_split(self, grid2d):
        rng = np.random.default_rng(10)
        coeffs = rng.standard_normal(grid2d.shape) + 1j * rng.standard_normal(
            grid2d.shape
        )
        out = dealias(coeffs, grid2d)
        keep = dealias_mask(grid2d)
        assert np.array_equal(out[keep], coeffs[keep])
        assert np.abs(out[~keep]).max() == 0.0


class TestTailDiagnostic:
    def test_band_limited_has_no_tail(self, grid1d):
        coeffs = np.zeros(grid1d.shape, dtype=complex)
        coeffs[5] = coeffs[-5] = 1.0
        f = from_spectrum(grid1d, coeffs)
        assert spectral_tail_fraction(f) < 1e-28

    def test_noise_has_tail(self, grid1d):
        f = random_field(grid1d, seed=11)
        assert spectral_tail_fraction(f) > 1e-3


class TestNormReport:
    def test_exponent_set_and_invariant(self, grid2d):
        f = random_field(grid2d, seed=12)
        rep = norm_report(f, p_model=2.0, q=3.0, t=1.5)
        assert set(rep.lp) == {1.0, 2.0, 6.0, np.inf}
        for p in rep.lp:
            assert rep.w1p[p] >= rep.lp[p]
            assert rep.lp[p] >= 0

    def test_negative_time_rejected(self, grid2d):
        f = random_field(grid2d, seed=13)
        with pytest.raises(ValueError):
            norm_report(f, 2.0, 3.0, t=-1.0)


class TestDilate:
    def test_whole_space_scaling_exact(self, grid1d):
        # L^p norms gain lam^(-d/p) and the gradient a further factor lam
        L = grid1d.box_length
        f = Field.from_function(
            grid1d, lambda x: np.exp(-((x - L / 2) ** 2) / (2 * (L / 20) ** 2))
        )
        lam = 2.0
        g = dilate(f, lam)
        assert g.grid.box_length == pytest.approx(L / lam)
        for p in (1.0, 2.0):
            assert lp_norm(g, p) == pytest.approx(
                lam ** (-1.0 / p) * lp_norm(f, p), rel=1e-12
            )
        gf = gradient_magnitude(spectral_gradient(f))
        gg = gradient_magnitude(spectral_gradient(g))
        assert lp_norm(gg, 2) == pytest.approx(
            lam ** (1 - 0.5) * lp_norm(gf, 2), rel=1e-12
        )

    def test_rejects_nonpositive(self, grid1d):
        with pytest.raises(ValueError):
            dilate(random_field(grid1d), 0.0)
