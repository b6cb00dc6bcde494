"""Surface-current laws J(grad u) and their growth diagnostics.

Each model carries a declared growth exponent q used by the decay theory;
for the slope-selection law and the component-rational family q describes
the large-gradient asymptotics only, which `growth_check` makes measurable.
"""

from __future__ import annotations

import numpy as np

from .spectral import Field, VectorField

__all__ = [
    "CurrentModel",
    "PowerLawCurrent",
    "RostKrugCurrent",
    "ComponentRationalCurrent",
    "ZeroCurrent",
    "DenominatorError",
    "current_from_config",
    "evaluate_current",
    "growth_check",
]


class DenominatorError(ValueError):
    """Rational current denominator too close to zero at some sample."""

    def __init__(self, message, location=None, value=None):
        super().__init__(message)
        self.location = location
        self.value = value


class CurrentModel:
    """Base class: a pointwise law J acting on gradient components."""

    kind: str
    q: float

    def evaluate(self, components: list[np.ndarray]) -> list[np.ndarray]:
        raise NotImplementedError

    def config(self) -> dict:
        return {"kind": self.kind, "q": self.q}

    def __repr__(self):
        return f"{type(self).__name__}(q={self.q})"


class PowerLawCurrent(CurrentModel):
    """J(v) = |v|^(q-1) v, the unique isotropic law with |J(v)| = |v|^q exactly."""

    kind = "power_law"

    def __init__(self, q: float):
        if not q > 1:
            raise ValueError(f"power-law exponent must exceed 1, got {q}")
        self.q = float(q)

    def evaluate(self, components):
        mag2 = np.zeros_like(components[0])
        for a in components:
            mag2 += a**2
        factor = mag2 ** ((self.q - 1.0) / 2.0)
        return [factor * a for a in components]

    def config(self):
        return {"kind": self.kind, "q": self.q}


class RostKrugCurrent(CurrentModel):
    """Slope-selection law J(v) = (1 - |v|^2) v; cubic leading behavior, q = 3."""

    kind = "rost_krug"
    q = 3.0

    def evaluate(self, components):
        mag2 = np.zeros_like(components[0])
        for a in components:
            mag2 += a**2
        factor = 1.0 - mag2
        return [factor * a for a in components]

    def config(self):
        return {"kind": self.kind}


class ComponentRationalCurrent(CurrentModel):
    """Componentwise law J_i(v) = v_i * f(v_i) for a rational f = numer/denom.

    Coefficient lists are in numpy polyval order (highest degree first).
    The denominator must stay above 1e-8 in magnitude on the operating range.
    """

    kind = "component_rational"
    _DENOM_FLOOR = 1e-8

    def __init__(self, numer, denom, q: float):
        self.numer = tuple(float(c) for c in numer)
        self.denom = tuple(float(c) for c in denom)
        if not self.numer or not self.denom:
            raise ValueError("numerator and denominator coefficients required")
        if not q >= 1:
            raise ValueError(f"declared exponent must be >= 1, got {q}")
        self.q = float(q)

    def evaluate(self, components):
        out = []
        for a in components:
            den = np.polyval(self.denom, a)
            bad = np.abs(den) <= self._DENOM_FLOOR
            if bad.any():
                flat = np.abs(den).ravel()
                worst = int(flat.argmin())
                raise DenominatorError(
                    f"denominator magnitude {flat[worst]:.3e} <= {self._DENOM_FLOOR} "
                    f"at flat sample index {worst}",
                    location=np.unravel_index(worst, den.shape),
                    value=float(flat[worst]),
                )
            out.append(a * np.polyval(self.numer, a) / den)
        return out

    def config(self):
        return {
            "kind": self.kind,
            "numer": list(self.numer),
            "denom": list(self.denom),
            "q": self.q,
        }


class ZeroCurrent(CurrentModel):
    """J identically zero: reduces the dynamics to the pure linear flow."""

    kind = "zero"

    def __init__(self, q: float = 3.0):
        self.q = float(q)

    def evaluate(self, components):
        return [np.zeros_like(a) for a in components]

    def config(self):
        return {"kind": self.kind, "q": self.q}


def current_from_config(cfg: dict) -> CurrentModel:
    kind = cfg.get("kind")
    if kind == "power_law":
        return PowerLawCurrent(cfg["q"])
    if kind == "rost_krug":
        return RostKrugCurrent()
    if kind == "component_rational":
        return ComponentRationalCurrent(cfg["numer"], cfg["denom"], cfg["q"])
    if kind == "zero":
        return ZeroCurrent(cfg.get("q", 3.0))
    raise ValueError(f"unknown current kind {kind!r}")


def evaluate_current(model: CurrentModel, g: VectorField) -> VectorField:
    """Apply J at every grid sample of the gradient field g."""
    out = model.evaluate(g.component_arrays())
    for a in out:
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{model!r} produced non-finite current values")
    return VectorField(tuple(Field(g.grid, a) for a in out))


def _sample_vectors(r: float, dimension: int, samples: int) -> np.ndarray:
    """Deterministic quasi-uniform sample of vectors with 0 < |v| <= r."""
    if dimension == 1:
        mags = r * (np.arange(samples) + 1.0) / samples
        signs = np.where(np.arange(samples) % 2 == 0, 1.0, -1.0)
        return (mags * signs)[:, None]
    n_mag = int(np.sqrt(samples))
    n_dir = samples // n_mag
    mags = r * (np.arange(n_mag) + 1.0) / n_mag
    golden = np.pi * (3.0 - np.sqrt(5.0))
    angles = golden * np.arange(n_dir)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return (mags[:, None, None] * dirs[None, :, :]).reshape(-1, 2)


def growth_check(model: CurrentModel, r: float, samples: int = 10_000) -> float:
    """sup over sampled |v| <= r of |J(v)| / |v|^q, against the declared q."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    vs = _sample_vectors(r, 2, samples)
    comps = [vs[:, j] for j in range(vs.shape[1])]
    out = model.evaluate(comps)
    j_mag = np.sqrt(sum(a**2 for a in out))
    v_mag = np.sqrt(sum(a**2 for a in comps))
    ratio = j_mag / v_mag**model.q
    if not np.all(np.isfinite(ratio)):
        raise ValueError("growth ratio non-finite on the sample set")
    return float(ratio.max())
