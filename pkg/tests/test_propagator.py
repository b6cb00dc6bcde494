import json

import numpy as np
import pytest

from mbesim.propagator import (
    KernelScalingReport,
    UnresolvedKernelError,
    apply_semigroup,
    derivative_magnitude,
    kernel_mass,
    kernel_physical,
    phi1,
    phi1_multiplier,
    phi2,
    semigroup_multiplier,
    theoretical_kernel_slope,
    verify_kernel_scaling,
)
from mbesim.spectral import Field, GridSpec, from_spectrum, lp_norm

# frozen oracle values:
#   adaptive quadrature of (1/2pi) int exp(-xi^4) dxi over R, cross-checked
#   against Gamma(5/4)/pi (both agree to 1e-15)
KERNEL_CENTER_1D = 0.28851686930823484
#   50-digit evaluation of (e^z - 1)/z
PHI1_AT_MINUS_1 = 0.6321205588285577
PHI1_AT_MINUS_1E6 = 0.99999950000016666662


@pytest.fixture
def grid1d():
    return GridSpec(1, 128, 8.0)


def single_mode(grid, m=3, amp=1.0):
    coeffs = np.zeros(grid.shape, dtype=complex)
    coeffs[m] = coeffs[-m] = amp * grid.size / 2.0
    return from_spectrum(grid, coeffs)


class TestSemigroup:
    def test_time_zero_identity(self, grid1d):
        rng = np.random.default_rng(0)
        f = Field(grid1d, rng.standard_normal(grid1d.shape))
        g = apply_semigroup(f, 0.0)
        assert np.array_equal(g.samples, f.samples)

    def test_single_mode_amplitude(self, grid1d):
        m = 3
        k = 2 * np.pi * m / grid1d.box_length
        f = single_mode(grid1d, m)
        t = 0.37
        g = apply_semigroup(f, t)
        assert lp_norm(g, 2) == pytest.approx(
            np.exp(-t * k**4) * lp_norm(f, 2), rel=1e-13
        )

    def test_exponent_additivity(self, grid1d):
        rng = np.random.default_rng(1)
        f = Field(grid1d, rng.standard_normal(grid1d.shape))
        a = apply_semigroup(apply_semigroup(f, 0.3), 0.5)
        b = apply_semigroup(f, 0.8)
        assert lp_norm(a - b, 2) <= 1e-13 * lp_norm(f, 2)

    def test_negative_time_rejected(self, grid1d):
        with pytest.raises(ValueError):
            apply_semigroup(Field.zeros(grid1d), -0.1)

    def test_l2_contraction(self, grid1d):
        rng = np.random.default_rng(2)
        f = Field(grid1d, rng.standard_normal(grid1d.shape))
        n0 = lp_norm(f, 2)
        for t in (1e-4, 0.1, 3.0):
            assert lp_norm(apply_semigroup(f, t), 2) <= n0 * (1 + 1e-14)

    def test_mean_conserved(self, grid1d):
        rng = np.random.default_rng(3)
        f = Field(grid1d, rng.standard_normal(grid1d.shape) + 4.2)
        g = apply_semigroup(f, 0.7)
        assert g.mean() == pytest.approx(f.mean(), abs=1e-14)

    def test_multiplier_weights_range(self, grid1d):
        mult = semigroup_multiplier(grid1d, 0.9)
        assert mult.weights.flat[0] == 1.0  # k = 0
        # high modes may underflow to exactly 0
        assert np.all(mult.weights >= 0) and np.all(mult.weights <= 1.0)
        from mbesim.spectral import k_quartic

        order = np.argsort(k_quartic(grid1d).ravel())
        assert np.all(np.diff(mult.weights.ravel()[order]) <= 1e-15)

    def test_young_consistency(self, grid1d):
        # ||k_t * f||_p <= ||k_t||_1 ||f||_p, the convolution route
        rng = np.random.default_rng(4)
        f = Field(grid1d, rng.standard_normal(grid1d.shape))
        t = 0.01
        k1 = lp_norm(kernel_physical(t, grid1d), 1)
        for p in (1.0, 2.0, np.inf):
            assert lp_norm(apply_semigroup(f, t), p) <= k1 * lp_norm(f, p) * (
                1 + 1e-12
            )


class TestPhi1:
    def test_at_zero(self):
        assert phi1(0.0) == 1.0
        mult = phi1_multiplier(GridSpec(1, 64, 4.0), 0.5)
        assert mult.weights.flat[0] == 1.0

    def test_safe_magnitude_value(self):
        assert phi1(-1.0) == pytest.approx(PHI1_AT_MINUS_1, rel=1e-12)

    def test_series_branch_vs_extended_precision(self):
        assert phi1(-1e-6) == pytest.approx(PHI1_AT_MINUS_1E6, rel=1e-12)

    def test_branch_seam_continuity(self):
        below, above = phi1(-0.999e-3), phi1(-1.001e-3)
        assert abs(below - above) < 5e-6  # smooth across the series cutoff
        for z in (-0.9e-3, -1.1e-3):
            ref = np.expm1(z) / z
            assert phi1(z) == pytest.approx(ref, rel=1e-11)

    def test_monotone_in_wavenumber(self):
        grid = GridSpec(1, 64, 4.0)
        w = phi1_multiplier(grid, 1.0).weights
        from mbesim.spectral import k_quartic

        order = np.argsort(k_quartic(grid).ravel())
        assert np.all(np.diff(w.ravel()[order]) <= 1e-15)

    def test_requires_positive_duration(self):
        with pytest.raises(ValueError):
            phi1_multiplier(GridSpec(1, 64, 4.0), 0.0)

    def test_phi2_small_branch(self):
        # (e^z - 1 - z)/z^2 at z = -1e-6, 50-digit value
        assert phi2(-1e-6) == pytest.approx(0.49999983333337500, rel=1e-12)
        assert phi2(0.0) == 0.5


class TestKernel:
    def test_unit_mass(self):
        grid = GridSpec(1, 256, 16.0)
        k = kernel_physical(3e-4, grid)
        assert kernel_mass(k) == pytest.approx(1.0, abs=1e-10)

    def test_center_value_against_quadrature_oracle(self):
        grid = GridSpec(1, 256, 32.0)
        k = kernel_physical(1.0, grid)
        assert k.samples[0] == pytest.approx(KERNEL_CENTER_1D, abs=1e-6)

    def test_self_similarity(self):
        # k_t(x) = t^(-1/4) k_1(x t^(-1/4)) at sample points whose doubled
        # coordinate stays well inside the box (whole-space identity; the box
        # must dwarf both kernels' periodization images)
        grid = GridSpec(1, 512, 64.0)
        k1 = kernel_physical(1.0, grid).samples
        kt = kernel_physical(1.0 / 16.0, grid).samples
        n = grid.points_per_axis
        idx = np.r_[0 : n // 8, 7 * n // 8 : n]
        matched = 2.0 * k1[(2 * idx) % n]
        scale = np.abs(kt).max()
        assert np.abs(kt[idx] - matched).max() < 1e-8 * scale

    def test_sign_change(self):
        # the fourth-order kernel is NOT positive
        for d in (1, 2):
            grid = GridSpec(d, 128, 16.0)
            k = kernel_physical(1e-3 if d == 1 else 1e-3, grid)
            assert k.samples.min() < 0

    def test_unresolved_rejected(self):
        grid = GridSpec(1, 32, 64.0)  # k_max tiny: t small leaves tail energy
        with pytest.raises(UnresolvedKernelError):
            kernel_physical(1e-6, grid)

    def test_requires_positive_time(self):
        with pytest.raises(ValueError):
            kernel_physical(0.0, GridSpec(1, 64, 8.0))


class TestDerivativeMagnitude:
    def test_order_zero_is_abs(self, grid1d):
        rng = np.random.default_rng(5)
        f = Field(grid1d, rng.standard_normal(grid1d.shape))
        assert np.array_equal(derivative_magnitude(f, 0).samples, np.abs(f.samples))

    def test_order_one_matches_gradient(self):
        grid = GridSpec(2, 32, 4.0)
        rng = np.random.default_rng(6)
        from mbesim.spectral import (
            dealias,
            from_spectrum,
            gradient_magnitude,
            spectral_gradient,
        )

        f = from_spectrum(grid, dealias(rng.standard_normal(grid.shape) + 0j, grid))
        a = derivative_magnitude(f, 1)
        b = gradient_magnitude(spectral_gradient(f))
        assert lp_norm(a - b, np.inf) < 1e-12


class TestKernelScaling:
    def times(self):
        return np.geomspace(1e-4, 1e-3, 6)

    def test_d1_sup_norm_slope(self):
        grid = GridSpec(1, 256, 16.0)
        rep = verify_kernel_scaling(grid, 0, np.inf, self.times())
        assert rep.theoretical_slope == pytest.approx(-0.25)
        assert abs(rep.fitted_slope - rep.theoretical_slope) < 0.01

    def test_d2_gradient_l1_slope(self):
        grid = GridSpec(2, 256, 16.0)
        rep = verify_kernel_scaling(grid, 1, 1.0, self.times())
        assert rep.theoretical_slope == pytest.approx(-0.25)
        assert abs(rep.fitted_slope - rep.theoretical_slope) < 0.01

    def test_d1_mass_case(self):
        # p=1, n=0: zero slope; the constant-mass reading of the unit constant
        grid = GridSpec(1, 256, 16.0)
        rep = verify_kernel_scaling(grid, 0, 1.0, self.times())
        assert abs(rep.fitted_slope) < 0.01
        assert all(abs(m - 1.0) < 1e-10 for m in rep.masses)
        # the measured L1 constant of |k_t| exceeds 1 (sign-changing kernel)
        assert all(n > 1.0 for n in rep.norms)

    def test_too_few_times_rejected(self):
        grid = GridSpec(1, 256, 16.0)
        with pytest.raises(ValueError):
            verify_kernel_scaling(grid, 0, 2.0, [1e-4, 2e-4, 4e-4, 8e-4])

    def test_narrow_span_rejected(self):
        grid = GridSpec(1, 256, 16.0)
        with pytest.raises(ValueError):
            verify_kernel_scaling(grid, 0, 2.0, np.linspace(1e-4, 5e-4, 6))

    def test_json_shape(self):
        grid = GridSpec(1, 256, 16.0)
        rep = verify_kernel_scaling(grid, 0, np.inf, self.times())
        payload = json.loads(rep.to_json())
        assert payload["d"] == 1 and payload["n"] == 0 and payload["p"] == "inf"
        for key in ("times", "norms", "fitted_slope", "theoretical_slope",
                    "max_residual"):
            assert key in payload

    def test_theoretical_slope_formula(self):
        assert theoretical_kernel_slope(2, 1, 1.0) == pytest.approx(-0.25)
        assert theoretical_kernel_slope(1, 0, np.inf) == pytest.approx(-0.25)
        assert theoretical_kernel_slope(2, 0, 2.0) == pytest.approx(-0.25)


class TestMultiplierCache:
    def test_cache_hit_bit_identical(self, grid1d):
        a = semigroup_multiplier(grid1d, 0.123).weights
        b = semigroup_multiplier(grid1d, 0.123).weights
        assert a is b  # read-shared cache
        fresh = np.exp(-0.123 * np.asarray(
            __import__("mbesim.spectral", fromlist=["k_quartic"]).k_quartic(grid1d)
        ))
        assert np.array_equal(a, fresh)
        assert not a.flags.writeable
