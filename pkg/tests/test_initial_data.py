import numpy as np
import pytest

from mbesim.initial_data import FAMILIES, make_initial_data
from mbesim.spectral import (
    GridSpec,
    gradient_magnitude,
    lp_norm,
    spectral_gradient,
    spectral_tail_fraction,
)


@pytest.fixture
def grid():
    return GridSpec(2, 128, 16.0)


def central_half_mask(grid):
    x = grid.axis_coordinates()
    L = grid.box_length
    inside_axis = (x >= L / 4) & (x < 3 * L / 4)
    inside = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[axis] = grid.points_per_axis
        inside &= inside_axis.reshape(shape)
    return inside


@pytest.mark.parametrize("family", FAMILIES)
class TestFamilies:
    def test_mean_zero(self, grid, family):
        f = make_initial_data(family, grid, amplitude=0.2, seed=3)
        assert abs(f.mean()) <= 1e-14 * np.abs(f.samples).max()

    def test_supported_in_central_half(self, grid, family):
        f = make_initial_data(family, grid, amplitude=1.0, seed=3)
        outside = f.samples[~central_half_mask(grid)]
        assert np.abs(outside).max() <= 1e-10 * np.abs(f.samples).max()

    def test_amplitude_scales_gradient_linearly(self, grid, family):
        a = make_initial_data(family, grid, amplitude=0.1, seed=5)
        b = make_initial_data(family, grid, amplitude=0.2, seed=5)
        for p in (1.5, 2.0, np.inf):
            na = lp_norm(gradient_magnitude(spectral_gradient(a)), p)
            nb = lp_norm(gradient_magnitude(spectral_gradient(b)), p)
            assert nb == pytest.approx(2.0 * na, rel=1e-12)

    def test_seed_reproducible_bit_exact(self, grid, family):
        a = make_initial_data(family, grid, amplitude=0.3, seed=11)
        b = make_initial_data(family, grid, amplitude=0.3, seed=11)
        assert np.array_equal(a.samples, b.samples)

    def test_resolved_at_n128(self, grid, family):
        f = make_initial_data(family, grid, amplitude=1.0, seed=1)
        assert spectral_tail_fraction(f) < 1e-6


class TestValidation:
    def test_unknown_family(self, grid):
        with pytest.raises(ValueError):
            make_initial_data("plateau", grid, 1.0, 0)

    def test_amplitude_positive(self, grid):
        with pytest.raises(ValueError):
            make_initial_data("gaussian_bump", grid, 0.0, 0)

    def test_seeds_differ_for_random_family(self, grid):
        a = make_initial_data("random_band", grid, 1.0, seed=1)
        b = make_initial_data("random_band", grid, 1.0, seed=2)
        assert not np.array_equal(a.samples, b.samples)

    def test_peak_matches_amplitude(self, grid):
        f = make_initial_data("gaussian_bump", grid, amplitude=0.37, seed=0)
        assert np.abs(f.samples).max() == pytest.approx(0.37, rel=1e-12)
