"""Time evolution of u_t + Lap^2 u + div J(grad u) = 0 in integral form.

Two schemes share one discretization of the forced-response integral:

* ``picard_duhamel`` iterates each step to the fixed point of the integral
  map.  The integral over [0, h] is split into M subintervals; on each, the
  current is frozen at the midpoint value of the previous iterate and
  propagated with exact exponential weights (phi1 product integration).
* ``etd2`` is a standard two-stage exponential integrator used as an
  independent cross-check; the stiff linear part is treated exactly.

The k = 0 mode of the divergence vanishes identically, so both schemes
conserve the spatial mean to the last bit.
"""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fieldio
from .currents import CurrentModel
from .propagator import _phi1_weights, _phi2_weights, _semigroup_weights
from .spectral import (
    Field,
    GridSpec,
    dealias_mask,
    lp_norm,
    spectral_tail_fraction,
    wavenumbers,
)

__all__ = [
    "SolverConfig",
    "Trajectory",
    "NormSeries",
    "IterationStudy",
    "StepSizeError",
    "BlowUpError",
    "UnresolvedFieldError",
    "picard_step",
    "etd2_step",
    "solve",
    "iteration_study",
    "model_norm_exponent",
    "tracked_exponents",
    "save_trajectory",
    "load_norm_series",
    "load_meta",
]

_TAIL_LIMIT = 1e-6  # top-octave energy fraction an evolving field may carry
_SHELL_FRACTION = 1 / 16  # width of the boundary shell the contamination guard watches
_SHELL_LIMIT = 1e-8


class StepSizeError(RuntimeError):
    """Picard iteration failed to contract within the iteration budget."""

    def __init__(self, message, contraction_ratio=None):
        super().__init__(message)
        self.contraction_ratio = contraction_ratio


class BlowUpError(RuntimeError):
    """Non-finite values appeared while stepping."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnresolvedFieldError(ValueError):
    """Input field carries too much energy in the top octave of modes."""


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = "picard_duhamel"
    step: float = 0.01
    quadrature_nodes: int = 2
    picard_tol: float = 1e-10
    picard_max_iter: int = 50
    dealias: bool = True
    blowup_factor: float = 1e3
    snapshot_stride: int = 50

    def __post_init__(self):
        if self.scheme not in ("picard_duhamel", "etd2"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.quadrature_nodes < 2:
            raise ValueError("need at least 2 quadrature nodes per step")
        if not self.picard_tol > 0:
            raise ValueError("picard tolerance must be positive")


def model_norm_exponent(grid: GridSpec, model: CurrentModel) -> float:
    """p = d(q-1)/2 from the model's declared q, floored at 1."""
    return max(1.0, grid.dimension * (model.q - 1.0) / 2.0)


def tracked_exponents(grid: GridSpec, model: CurrentModel, extra=()) -> tuple[float, ...]:
    p = model_norm_exponent(grid, model)
    exps = {1.0, 2.0, p, p * model.q}
    exps.update(float(e) for e in extra)
    by_label = {}  # dedupe exponents that collide at display precision
    for e in sorted(exps):
        by_label.setdefault(_exp_label(e), e)
    return tuple(sorted(by_label.values())) + (np.inf,)


def _exp_label(p: float) -> str:
    return "inf" if np.isinf(p) else f"{p:g}"


# ---------------------------------------------------------------------------
# spectral-space stepping core


def _nonlinear_divergence(u_hat, grid, model, mask):
    """N(u)-hat = -i k . J-hat where J is evaluated pointwise on grad u."""
    ks = wavenumbers(grid)
    grads = [np.fft.ifftn(1j * k * u_hat).real for k in ks]
    currents = model.evaluate(grads)
    out = np.zeros(grid.shape, dtype=complex)
    for k, j in zip(ks, currents):
        j_hat = np.fft.fftn(j)
        if mask is not None:
            j_hat[~mask] = 0.0
        out += 1j * k * j_hat
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite nonlinear term")
    return -out


def _joint_norm_spectral(u_hat, grid, p):
    u = np.fft.ifftn(u_hat).real
    ks = wavenumbers(grid)
    grad = np.sqrt(
        sum(np.fft.ifftn(1j * k * u_hat).real ** 2 for k in ks)
    )
    fu = Field(grid, np.abs(u))
    fg = Field(grid, grad)
    return max(
        lp_norm(fu, p) + lp_norm(fg, p),
        float(np.abs(u).max() + grad.max()),
    )


class _DuhamelSweeper:
    """Shared machinery: one Picard sweep of the integral map on [0, h].

    Node layout: subinterval ends at m*tau (m = 0..M) and midpoints at
    (m + 1/2)*tau.  A sweep consumes the previous iterate's midpoint values
    (where the current is frozen) and rebuilds both node sets.
    """

    def __init__(self, grid, model, h, nodes, use_dealias):
        self.grid = grid
        self.model = model
        self.h = float(h)
        self.nodes = int(nodes)
        self.tau = self.h / self.nodes
        self.mask = dealias_mask(grid) if use_dealias else None
        self.e_full = _semigroup_weights(grid, self.tau)
        self.e_half = _semigroup_weights(grid, self.tau / 2.0)
        self.w_full = self.tau * _phi1_weights(grid, self.tau)
        self.w_half = (self.tau / 2.0) * _phi1_weights(grid, self.tau / 2.0)

    def free_flight(self, u_hat):
        ends = [u_hat]
        mids = []
        for _ in range(self.nodes):
            mids.append(self.e_half * ends[-1])
            ends.append(self.e_full * ends[-1])
        return ends, mids

    def sweep(self, u_hat, prev_mids):
        forcing = [
            _nonlinear_divergence(m, self.grid, self.model, self.mask)
            for m in prev_mids
        ]
        ends = [u_hat]
        mids = []
        for m in range(self.nodes):
            mids.append(self.e_half * ends[-1] + self.w_half * forcing[m])
            ends.append(self.e_full * ends[-1] + self.w_full * forcing[m])
        return ends, mids


def _picard_step_spectral(u_hat, grid, h, model, cfg):
    """Returns (new u_hat, iterations used, last contraction ratio)."""
    sweeper = _DuhamelSweeper(grid, model, h, cfg.quadrature_nodes, cfg.dealias)
    p = model_norm_exponent(grid, model)
    ends, mids = sweeper.free_flight(u_hat)
    prev_diff = None
    ratio = None
    for iteration in range(1, cfg.picard_max_iter + 1):
        new_ends, new_mids = sweeper.sweep(u_hat, mids)
        if not np.all(np.isfinite(new_ends[-1])):
            raise BlowUpError("non-finite Picard iterate")
        diff = _joint_norm_spectral(new_ends[-1] - ends[-1], grid, p)
        ends, mids = new_ends, new_mids
        if prev_diff is not None and prev_diff > 0:
            ratio = diff / prev_diff
        if diff < cfg.picard_tol:
            return ends[-1], iteration, ratio
        prev_diff = diff
    raise StepSizeError(
        f"Picard iteration did not reach {cfg.picard_tol:g} within "
        f"{cfg.picard_max_iter} iterations (last contraction ratio "
        f"{ratio if ratio is not None else float('nan'):.3g}); reduce the step",
        contraction_ratio=ratio,
    )


def _etd2_step_spectral(u_hat, grid, h, model, cfg):
    mask = dealias_mask(grid) if cfg.dealias else None
    e = _semigroup_weights(grid, h)
    w1 = h * _phi1_weights(grid, h)
    w2 = h * _phi2_weights(grid, h)
    n0 = _nonlinear_divergence(u_hat, grid, model, mask)
    stage = e * u_hat + w1 * n0
    n1 = _nonlinear_divergence(stage, grid, model, mask)
    out = stage + w2 * (n1 - n0)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite etd2 stage")
    return out


def _check_resolved(f: Field):
    if not np.all(np.isfinite(f.samples)):
        raise ValueError("field samples must be finite")
    tail = spectral_tail_fraction(f)
    if tail >= _TAIL_LIMIT:
        raise UnresolvedFieldError(
            f"top-octave energy fraction {tail:.3e} >= {_TAIL_LIMIT:g}; "
            "the field is under-resolved on this grid"
        )


def picard_step(u: Field, h: float, model: CurrentModel, cfg: SolverConfig) -> Field:
    """One step of length h by Picard iteration on the integral equation."""
    _check_resolved(u)
    out, _, _ = _picard_step_spectral(u.spectrum(), u.grid, float(h), model, cfg)
    return Field(u.grid, np.fft.ifftn(out).real)


def etd2_step(u: Field, h: float, model: CurrentModel, cfg: SolverConfig) -> Field:
    """One step of length h by the two-stage exponential integrator."""
    _check_resolved(u)
    out = _etd2_step_spectral(u.spectrum(), u.grid, float(h), model, cfg)
    return Field(u.grid, np.fft.ifftn(out).real)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class NormSeries:
    """Per-step time series of named norm tracks."""

    times: np.ndarray
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != len(self.times):
                raise ValueError(f"column {name!r} length mismatch")

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(
                f"no track {name!r}; available: {sorted(self.columns)}"
            )
        return self.columns[name]

    def to_csv(self, path) -> None:
        names = sorted(self.columns)
        header = ",".join(["t"] + names)
        data = np.column_stack([self.times] + [self.columns[n] for n in names])
        np.savetxt(path, data, delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path) -> "NormSeries":
        with open(path) as fh:
            names = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        cols = {n: data[:, i] for i, n in enumerate(names)}
        times = cols.pop("t")
        return cls(times=times, columns=cols)


@dataclass
class Trajectory:
    grid: GridSpec
    series: NormSeries
    snapshots: list[tuple[float, Field]]
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.series.times

    def final_field(self) -> Field:
        return self.snapshots[-1][1]


def _shell_mask(grid: GridSpec) -> np.ndarray:
    x = grid.axis_coordinates()
    half = grid.box_length / 2.0
    near = np.abs(x - half) > half * (1.0 - 2.0 * _SHELL_FRACTION)
    mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[axis] = grid.points_per_axis
        mask |= near.reshape(shape)
    return mask


def _record_norms(u_hat, grid, exponents, out):
    u = np.fft.ifftn(u_hat).real
    ks = wavenumbers(grid)
    grad = np.sqrt(sum(np.fft.ifftn(1j * k * u_hat).real ** 2 for k in ks))
    fu = Field(grid, u)
    fg = Field(grid, grad)
    mean = u.mean()
    fluct = Field(grid, u - mean)
    for p in exponents:
        lbl = _exp_label(p)
        a = lp_norm(fu, p)
        b = lp_norm(fg, p)
        out[f"u_L{lbl}"].append(a)
        out[f"grad_L{lbl}"].append(b)
        out[f"w1_L{lbl}"].append(a + b)
    out["mean"].append(mean)
    coarse = lp_norm(fluct, 2)
    out["coarseness"].append(coarse)
    out["coarseness_rms"].append(coarse / grid.box_length ** (grid.dimension / 2.0))
    return fu, fg


def solve(
    u0: Field,
    horizon: float,
    model: CurrentModel,
    cfg: SolverConfig,
    extra_exponents=(),
) -> Trajectory:
    """March from 0 to the horizon, recording norms every step.

    Halts early (with the reason in ``meta``) if a step blows up or any
    norm crosses the configured ceiling.  The boundary-contamination guard
    only warns; it never stops a run.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    _check_resolved(u0)
    grid = u0.grid
    h = cfg.step
    n_steps = int(round(horizon / h))
    if n_steps < 1 or abs(n_steps * h - horizon) > 1e-9 * max(1.0, horizon):
        n_steps = int(np.ceil(horizon / h))
    exponents = tracked_exponents(grid, model, extra_exponents)
    columns: dict[str, list] = {
        key: []
        for p in exponents
        for key in (
            f"u_L{_exp_label(p)}",
            f"grad_L{_exp_label(p)}",
            f"w1_L{_exp_label(p)}",
        )
    }
    columns.update({"mean": [], "coarseness": [], "coarseness_rms": []})

    shell = _shell_mask(grid)
    start = _time.perf_counter()
    u_hat = u0.spectrum()
    times = [0.0]
    fu, _ = _record_norms(u_hat, grid, exponents, columns)
    ceiling = cfg.blowup_factor * max(
        columns["w1_Linf"][0], np.finfo(float).tiny
    )
    snapshots = [(0.0, u0)]
    termination = "completed"
    blowup_time = None
    shell_worst = 0.0
    shell_first_violation = None
    picard_iters: list[int] = []
    for step_index in range(1, n_steps + 1):
        t = step_index * h
        try:
            if cfg.scheme == "picard_duhamel":
                u_hat, iters, _ = _picard_step_spectral(u_hat, grid, h, model, cfg)
                picard_iters.append(iters)
            else:
                u_hat = _etd2_step_spectral(u_hat, grid, h, model, cfg)
        except BlowUpError:
            termination = "blowup"
            blowup_time = t
            break
        times.append(t)
        fu, _ = _record_norms(u_hat, grid, exponents, columns)
        amp = np.abs(fu.samples).max()
        if amp > 0:
            shell_amp = np.abs(fu.samples[shell]).max() / amp
            shell_worst = max(shell_worst, shell_amp)
            if shell_amp > _SHELL_LIMIT and shell_first_violation is None:
                shell_first_violation = t
        w1inf = columns["w1_Linf"][-1]
        if not np.isfinite(w1inf) or w1inf > ceiling:
            termination = "blowup_ceiling"
            blowup_time = t
            break
        if step_index % cfg.snapshot_stride == 0 or step_index == n_steps:
            snapshots.append((t, Field(grid, np.fft.ifftn(u_hat).real)))

    elapsed = _time.perf_counter() - start
    series = NormSeries(
        times=np.asarray(times),
        columns={k: np.asarray(v) for k, v in columns.items()},
    )
    meta = {
        "grid": {
            "dimension": grid.dimension,
            "points_per_axis": grid.points_per_axis,
            "box_length": grid.box_length,
        },
        "model": model.config(),
        "solver": {
            "scheme": cfg.scheme,
            "step": cfg.step,
            "quadrature_nodes": cfg.quadrature_nodes,
            "picard_tol": cfg.picard_tol,
            "picard_max_iter": cfg.picard_max_iter,
            "dealias": cfg.dealias,
            "blowup_factor": cfg.blowup_factor,
            "snapshot_stride": cfg.snapshot_stride,
        },
        "norm_exponent_p": model_norm_exponent(grid, model),
        "tracked_exponents": [_exp_label(p) for p in exponents],
        "horizon": horizon,
        "steps_taken": len(times) - 1,
        "termination": termination,
        "blowup_time": blowup_time,
        "elapsed_seconds": elapsed,
        "guards": {
            "boundary_shell_worst": shell_worst,
            "boundary_shell_limit": _SHELL_LIMIT,
            "boundary_shell_first_violation": shell_first_violation,
            "boundary_shell_warning": shell_first_violation is not None,
            "blowup_ceiling": ceiling,
        },
        "picard_iterations_max": max(picard_iters) if picard_iters else None,
    }
    return Trajectory(grid=grid, series=series, snapshots=snapshots, meta=meta)


# ---------------------------------------------------------------------------
# the construction's iterates on one interval


@dataclass(frozen=True)
class IterationStudy:
    """Successive linearized iterates on [0, delta] and their separations."""

    delta: float
    differences: tuple[float, ...]  # ||u^n - u^{n-1}|| in the joint norm, n >= 1
    sup_norms: tuple[float, ...]  # sup over nodes of ||u^n||, n >= 0
    doubling_margin: float  # max_n sup_norms / ||u0||
    initial_norm: float

    def ratios(self) -> tuple[float, ...]:
        return tuple(
            b / a for a, b in zip(self.differences, self.differences[1:]) if a > 0
        )


def iteration_study(
    u0: Field,
    delta: float,
    n_max: int,
    model: CurrentModel,
    cfg: SolverConfig,
    substeps: int = 16,
) -> IterationStudy:
    """Build the iterates u^0 (free flow) and u^n driven by u^{n-1} on [0, delta].

    Each iterate solves a linear inhomogeneous problem discretized with the
    same product-integration rule the Picard step uses; differences are
    measured as the sup over nodes of the joint W^{1,p}/W^{1,inf} norm.
    """
    if n_max < 3:
        raise ValueError("need n_max >= 3 iterates")
    if not delta > 0:
        raise ValueError("delta must be positive")
    _check_resolved(u0)
    grid = u0.grid
    p = model_norm_exponent(grid, model)
    sweeper = _DuhamelSweeper(grid, model, delta, substeps, cfg.dealias)
    u_hat = u0.spectrum()
    initial_norm = _joint_norm_spectral(u_hat, grid, p)

    def sup_over_nodes(ends, mids, other=None):
        vals = []
        nodes = ends + mids
        others = ([None] * len(nodes)) if other is None else (other[0] + other[1])
        for node, ref in zip(nodes, others):
            x = node if ref is None else node - ref
            vals.append(_joint_norm_spectral(x, grid, p))
        return max(vals)

    ends, mids = sweeper.free_flight(u_hat)
    sup_norms = [sup_over_nodes(ends, mids)]
    differences = []
    for n in range(1, n_max + 1):
        new_ends, new_mids = sweeper.sweep(u_hat, mids)
        for arr in new_ends:
            if not np.all(np.isfinite(arr)):
                raise BlowUpError(f"non-finite iterate at n={n}")
        differences.append(sup_over_nodes(new_ends, new_mids, (ends, mids)))
        ends, mids = new_ends, new_mids
        sup_norms.append(sup_over_nodes(ends, mids))
    margin = max(sup_norms) / initial_norm if initial_norm > 0 else 0.0
    return IterationStudy(
        delta=float(delta),
        differences=tuple(differences),
        sup_norms=tuple(sup_norms),
        doubling_margin=float(margin),
        initial_norm=float(initial_norm),
    )


# ---------------------------------------------------------------------------
# persistence


def save_trajectory(traj: Trajectory, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    traj.series.to_csv(outdir / "norms.csv")
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    for t, f in traj.snapshots:
        fieldio.write_field(f, snapdir / f"t{t:012.6f}.mbef")
    with open(outdir / "meta.json", "w") as fh:
        json.dump(traj.meta, fh, indent=2)
    return outdir


def load_norm_series(rundir) -> NormSeries:
    return NormSeries.from_csv(Path(rundir) / "norms.csv")


def load_meta(rundir) -> dict:
    with open(Path(rundir) / "meta.json") as fh:
        return json.load(fh)
