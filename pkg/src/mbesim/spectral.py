"""Periodic-grid height fields, spectral calculus, and discrete norms.

Everything operates on a uniform periodic box in one or two dimensions.
Transforms use the unnormalized-forward numpy FFT convention; wavenumbers
per axis are 2*pi*m/L for integer m in [-N/2, N/2).  All public values are
immutable once constructed and safe to share between workers.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "VectorField",
    "NormReport",
    "from_spectrum",
    "spectral_gradient",
    "spectral_divergence",
    "spectral_laplacian",
    "gradient_magnitude",
    "lp_norm",
    "w1p_norm",
    "joint_norm",
    "fractional_gradient_norm",
    "dealias",
    "dealias_mask",
    "spectral_tail_fraction",
    "norm_report",
    "dilate",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic box: `dimension` axes, `points_per_axis` samples each,
    side length `box_length`."""

    dimension: int
    points_per_axis: int
    box_length: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        n = self.points_per_axis
        if n < 8 or n % 2 != 0:
            raise ValueError(f"points_per_axis must be even and >= 8, got {n}")
        if not (self.box_length > 0):
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    def axis_coordinates(self) -> np.ndarray:
        """Sample coordinates along one axis: j*L/N for j = 0..N-1."""
        return np.arange(self.points_per_axis) * self.spacing

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        x = self.axis_coordinates()
        return tuple(np.meshgrid(*([x] * self.dimension), indexing="ij"))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=64)
def mode_numbers(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Integer mode indices m per axis, fftfreq-ordered, shaped for broadcasting."""
    n = grid.points_per_axis
    m = np.fft.fftfreq(n, d=1.0 / n)
    out = []
    for axis in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[axis] = n
        out.append(_readonly(m.reshape(shape).copy()))
    return tuple(out)


@functools.lru_cache(maxsize=64)
def wavenumbers(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Wavenumbers 2*pi*m/L per axis, shaped for broadcasting."""
    scale = 2.0 * np.pi / grid.box_length
    return tuple(_readonly(scale * m) for m in mode_numbers(grid))


@functools.lru_cache(maxsize=64)
def k_squared(grid: GridSpec) -> np.ndarray:
    ks = wavenumbers(grid)
    out = np.zeros(grid.shape)
    for k in ks:
        out = out + k**2
    return _readonly(out)


@functools.lru_cache(maxsize=64)
def k_quartic(grid: GridSpec) -> np.ndarray:
    return _readonly(k_squared(grid) ** 2)


@functools.lru_cache(maxsize=64)
def dealias_mask(grid: GridSpec) -> np.ndarray:
    """Boolean keep-mask for the two-thirds rule: drop modes with any |m| > N/3."""
    cutoff = grid.points_per_axis / 3.0
    keep = np.ones(grid.shape, dtype=bool)
    for m in mode_numbers(grid):
        keep &= np.abs(m) <= cutoff
    return _readonly(keep)


class Field:
    """Real samples of a scalar function on a GridSpec.  Immutable."""

    __slots__ = ("grid", "samples")

    def __init__(self, grid: GridSpec, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.size != grid.size:
            raise ValueError(
                f"expected {grid.size} samples for grid {grid}, got {samples.size}"
            )
        samples = samples.reshape(grid.shape).copy()
        if not np.all(np.isfinite(samples)):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "samples", _readonly(samples))

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "Field":
        return cls(grid, fn(*grid.meshgrid()))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def spectrum(self) -> np.ndarray:
        """Forward FFT coefficients (numpy convention, unnormalized)."""
        return np.fft.fftn(self.samples)

    def mean(self) -> float:
        return float(self.samples.mean())

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.samples - other.samples)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.samples * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.samples)

    def __repr__(self):
        return f"Field(d={self.grid.dimension}, N={self.grid.points_per_axis}, L={self.grid.box_length})"


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True)
class VectorField:
    """d scalar components sharing one GridSpec."""

    components: tuple[Field, ...]

    def __post_init__(self):
        grids = {f.grid for f in self.components}
        if len(grids) != 1:
            raise ValueError("VectorField components must share one grid")
        if len(self.components) != self.grid.dimension:
            raise ValueError(
                f"expected {self.grid.dimension} components, got {len(self.components)}"
            )

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    def component_arrays(self) -> list[np.ndarray]:
        return [f.samples for f in self.components]


def from_spectrum(grid: GridSpec, coeffs: np.ndarray) -> Field:
    """Inverse transform of FFT coefficients, discarding the O(eps) imaginary part."""
    return Field(grid, np.fft.ifftn(coeffs).real)


def spectral_gradient(f: Field) -> VectorField:
    """Exact gradient of the trigonometric interpolant."""
    fh = f.spectrum()
    ks = wavenumbers(f.grid)
    comps = tuple(from_spectrum(f.grid, 1j * k * fh) for k in ks)
    return VectorField(comps)


def spectral_divergence(v: VectorField) -> Field:
    """Divergence via i*k dot v-hat; the k=0 coefficient is exactly zero."""
    grid = v.grid
    ks = wavenumbers(grid)
    out = np.zeros(grid.shape, dtype=complex)
    for k, comp in zip(ks, v.components):
        out += 1j * k * comp.spectrum()
    return from_spectrum(grid, out)


def spectral_laplacian(f: Field) -> Field:
    return from_spectrum(f.grid, -k_squared(f.grid) * f.spectrum())


def gradient_magnitude(v: VectorField) -> Field:
    mag = np.zeros(v.grid.shape)
    for a in v.component_arrays():
        mag += a**2
    return Field(v.grid, np.sqrt(mag))


def lp_norm(f: Field, p: float) -> float:
    """Discrete L^p norm: midpoint quadrature with weight h^d; grid max for p=inf."""
    a = np.abs(f.samples)
    if p == np.inf:
        return float(a.max())
    if p < 1:
        raise ValueError(f"exponent must satisfy p >= 1 or p = inf, got {p}")
    if p == 1:
        return float(a.sum() * f.grid.cell_volume)
    if p == 2:
        return float(np.sqrt((a**2).sum() * f.grid.cell_volume))
    return float(((a**p).sum() * f.grid.cell_volume) ** (1.0 / p))


def w1p_norm(f: Field, p: float) -> float:
    """||f||_p + || |grad f| ||_p."""
    return lp_norm(f, p) + lp_norm(gradient_magnitude(spectral_gradient(f)), p)


def joint_norm(f: Field, p: float) -> float:
    """Norm of the intersection space: max of the W^{1,p} and W^{1,inf} norms."""
    grad = gradient_magnitude(spectral_gradient(f))
    return max(
        lp_norm(f, p) + lp_norm(grad, p),
        lp_norm(f, np.inf) + lp_norm(grad, np.inf),
    )


def fractional_gradient_norm(f: Field, s: float, p: float) -> float:
    """Homogeneous-seminorm surrogate: L^p norm of the |k|^s multiplier image."""
    if s < 0:
        raise ValueError("order s must be >= 0")
    mult = k_squared(f.grid) ** (s / 2.0)
    return lp_norm(from_spectrum(f.grid, mult * f.spectrum()), p)


def dealias(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Two-thirds rule: zero every coefficient with any |m| > N/3."""
    out = coeffs.copy()
    out[~dealias_mask(grid)] = 0.0
    return out


def spectral_tail_fraction(f: Field) -> float:
    """Energy fraction carried by the top octave of modes (any |m| > N/4)."""
    coeffs = f.spectrum()
    power = np.abs(coeffs) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    cutoff = f.grid.points_per_axis / 4.0
    tail = np.zeros(f.grid.shape, dtype=bool)
    for m in mode_numbers(f.grid):
        tail |= np.abs(m) > cutoff
    return float(power[tail].sum() / total)


@dataclass(frozen=True)
class NormReport:
    """L^p / W^{1,p} norms of one field at one time, over a fixed exponent set."""

    t: float
    lp: dict[float, float]
    grad_lp: dict[float, float]
    w1p: dict[float, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.w1p:
            object.__setattr__(
                self, "w1p", {p: self.lp[p] + self.grad_lp[p] for p in self.lp}
            )
        if self.t < 0:
            raise ValueError("time must be non-negative")
        for d in (self.lp, self.grad_lp, self.w1p):
            for p, v in d.items():
                if v < 0:
                    raise ValueError(f"norm value for p={p} is negative: {v}")


def norm_report(f: Field, p_model: float, q: float, t: float = 0.0) -> NormReport:
    """Norms at the exponents the decay theory tracks: {1, p, 2, p*q, inf}."""
    exps = sorted({1.0, float(p_model), 2.0, float(p_model) * float(q)}) + [np.inf]
    grad = gradient_magnitude(spectral_gradient(f))
    lp = {p: lp_norm(f, p) for p in exps}
    grad_lp = {p: lp_norm(grad, p) for p in exps}
    return NormReport(t=t, lp=lp, grad_lp=grad_lp)


def dilate(f: Field, lam: float) -> Field:
    """Scale family u_lam(x) = u(lam*x): the same samples re-indexed onto a
    box shrunk by lam (sample j of the compressed function on the small box
    coincides with sample j of u on the original box).

    L^p norms, spectral derivatives, and |k|^s seminorms then scale by the
    exact whole-space dilation powers lam^(-d/p), lam^(1-d/p), lam^(s-d/p).
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    small = GridSpec(
        f.grid.dimension, f.grid.points_per_axis, f.grid.box_length / lam
    )
    return Field(small, f.samples)
