"""Seeded initial-height profiles for experiments.

Every family is built as (smooth profile) x (compactly supported C-infinity
window filling the central half-box), then projected against the window so
the spatial mean vanishes without disturbing the support.  The returned
field is the unit-amplitude profile scaled by ``amplitude``, so gradient
norms scale exactly linearly in the amplitude.

Resolution note: the window's spectral tail clears the solver's top-octave
guard for N >= 128; coarser grids want hand-built band-limited data.
"""

from __future__ import annotations

import numpy as np

from .spectral import Field, GridSpec

__all__ = ["make_initial_data", "FAMILIES"]

FAMILIES = ("gaussian_bump", "random_band", "multibump")


def _window(grid: GridSpec, center, radius: float) -> np.ndarray:
    """C-infinity bump exp(1 - 1/(1 - rho^2)), identically zero for rho >= 1."""
    X = grid.meshgrid()
    r2 = sum((x - c) ** 2 for x, c in zip(X, center)) / radius**2
    w = np.zeros(grid.shape)
    inside = r2 < 1.0
    w[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return w


def _mean_project(profile: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Remove the mean by subtracting a multiple of the window itself,
    keeping the support inside the window."""
    return profile - (profile.sum() / window.sum()) * window


def make_initial_data(
    family: str, grid: GridSpec, amplitude: float, seed: int = 0
) -> Field:
    """Mean-zero profile supported in the central half-box, peak height ~amplitude."""
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    L = grid.box_length
    center = (L / 2.0,) * grid.dimension
    X = grid.meshgrid()

    if family == "gaussian_bump":
        # odd modulation inside the window: a clean dipole-like profile
        w = _window(grid, center, L / 4.0)
        prof = w * np.sin(2.0 * np.pi * (X[0] - L / 2.0) / (L / 2.0))
        prof = _mean_project(prof, w)
    elif family == "random_band":
        rng = np.random.default_rng(seed)
        w = _window(grid, center, L / 4.0)
        prof = np.zeros(grid.shape)
        for _ in range(6):
            m = rng.integers(1, 4, size=grid.dimension)
            phase = rng.uniform(0.0, 2.0 * np.pi, size=grid.dimension)
            wave = np.ones(grid.shape)
            for axis in range(grid.dimension):
                wave = wave * np.sin(
                    2.0 * np.pi * m[axis] * X[axis] / L + phase[axis]
                )
            prof += rng.normal() * wave
        prof = _mean_project(w * prof, w)
    else:  # multibump
        rng = np.random.default_rng(seed)
        envelope = _window(grid, center, L / 4.0)
        sigma = L / 12.0
        lobes = np.zeros(grid.shape)
        for sign in (1.0, -1.0, 1.0, -1.0):
            offset = rng.uniform(-L / 8.0, L / 8.0, size=grid.dimension)
            r2 = sum((x - c - o) ** 2 for x, c, o in zip(X, center, offset))
            lobes += sign * rng.uniform(0.5, 1.0) * np.exp(-r2 / (2 * sigma**2))
        prof = _mean_project(envelope * lobes, envelope)

    peak = np.abs(prof).max()
    if peak == 0.0:
        raise ValueError(f"degenerate profile for family {family!r}")
    return Field(grid, (amplitude / peak) * prof)
