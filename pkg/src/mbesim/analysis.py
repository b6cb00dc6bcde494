"""Power-law fits and the quantitative decay/growth verdicts.

Each check turns a recorded norm series into a PASS/FAIL verdict with the
threshold and measured margin spelled out; the bounds under test are upper
bounds with unspecified constants, so verdicts use compensated-track
boundedness or slope-at-most-bound rules, never slope equality.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from fractions import Fraction

import numpy as np

from .solver import NormSeries, Trajectory

__all__ = [
    "DecayFit",
    "fit_exponent",
    "GradientBoundReport",
    "check_gradient_bounds",
    "check_interpolated_decay",
    "check_growth",
    "CoarsenessReport",
    "check_coarseness",
    "coarsening_window",
    "exponent_chain",
    "default_fit_window",
]

HEADROOM = 1.1  # compensated tracks may exceed their early value by 10%
SLOPE_SLACK = 0.05  # fitted slopes may exceed the theoretical bound by this


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponent of one track over a window, with the verdict
    margin against its theoretical bound (negative margin = inside bound)."""

    track: str
    window: tuple[float, float]
    slope: float
    intercept: float
    max_residual: float
    theoretical_slope: float | None = None
    slope_slack: float | None = None
    margin: float | None = None
    verdict: str | None = None
    against_one_plus_t: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def default_fit_window(step: float, horizon: float) -> tuple[float, float]:
    """Exclude the initial transient: [max(10h, 0.05T), T]."""
    return (max(10.0 * step, 0.05 * horizon), horizon)


def fit_exponent(
    series: NormSeries,
    track: str,
    window: tuple[float, float],
    against_one_plus_t: bool = False,
) -> DecayFit:
    """OLS of log(value) against log(t) (or log(1+t)) inside the window."""
    t = series.times
    y = series.column(track)
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if against_one_plus_t:
        sel &= t >= 0.0
    else:
        sel &= t > 0.0
    if sel.sum() < 20:
        raise ValueError(
            f"need at least 20 samples in window {window}, have {int(sel.sum())}"
        )
    yv = y[sel]
    if np.any(yv <= 0):
        raise ValueError(f"track {track!r} has non-positive values in the window")
    x = np.log1p(t[sel]) if against_one_plus_t else np.log(t[sel])
    slope, intercept = np.polyfit(x, np.log(yv), 1)
    resid = np.abs(np.log(yv) - (slope * x + intercept)).max()
    return DecayFit(
        track=track,
        window=(float(lo), float(hi)),
        slope=float(slope),
        intercept=float(intercept),
        max_residual=float(resid),
        against_one_plus_t=against_one_plus_t,
    )


def _with_verdict(fit: DecayFit, bound: float) -> DecayFit:
    margin = fit.slope - (bound + SLOPE_SLACK)
    return DecayFit(
        track=fit.track,
        window=fit.window,
        slope=fit.slope,
        intercept=fit.intercept,
        max_residual=fit.max_residual,
        theoretical_slope=float(bound),
        slope_slack=SLOPE_SLACK,
        margin=float(margin),
        verdict="PASS" if margin <= 0 else "FAIL",
        against_one_plus_t=fit.against_one_plus_t,
    )


@dataclass(frozen=True)
class GradientBoundReport:
    """Boundedness checks for grad u: the compensated sup-norm track
    t^(d/4p) ||grad u||_inf and the plain ||grad u||_p track."""

    p: float
    window: tuple[float, float]
    alpha: float  # compensation exponent d/(4p)
    sup_constant: float  # C1 estimate: sup over window of the compensated track
    lp_constant: float  # C2 estimate: sup of ||grad u||_p
    stiffness: float  # the combined sup of ||grad u||_p + t^alpha ||grad u||_inf
    compensated_ratio: float  # max over window / early value, PASS iff <= 1.1
    lp_ratio: float  # overall max / max over first 10% of horizon
    verdict: str
    thresholds: dict

    def to_dict(self) -> dict:
        return asdict(self)


def check_gradient_bounds(
    traj: Trajectory, p: float, window: tuple[float, float] | None = None
) -> GradientBoundReport:
    """Gradient control on a completed run: the decay theory's two claims."""
    meta = traj.meta
    if meta.get("termination") != "completed":
        raise ValueError(
            f"trajectory did not complete (termination={meta.get('termination')!r})"
        )
    d = traj.grid.dimension
    alpha = d / (4.0 * p)
    series = traj.series
    t = series.times
    if window is None:
        window = default_fit_window(meta["solver"]["step"], float(t[-1]))
    lo, hi = window
    grad_inf = series.column("grad_Linf")
    grad_p = series.column(f"grad_L{p:g}")

    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 2:
        raise ValueError(f"window {window} holds fewer than 2 samples")
    comp = t[sel] ** alpha * grad_inf[sel]
    comp_ratio = float(comp.max() / comp[0])

    early = grad_p[t <= 0.1 * t[-1]]
    lp_ratio = float(grad_p.max() / early.max())

    pos = t > 0
    sup_constant = float((t[pos] ** alpha * grad_inf[pos]).max())
    lp_constant = float(grad_p.max())
    verdict = "PASS" if (comp_ratio <= HEADROOM and lp_ratio <= HEADROOM) else "FAIL"
    return GradientBoundReport(
        p=float(p),
        window=(float(lo), float(hi)),
        alpha=float(alpha),
        sup_constant=sup_constant,
        lp_constant=lp_constant,
        stiffness=float(lp_constant + sup_constant),
        compensated_ratio=comp_ratio,
        lp_ratio=lp_ratio,
        verdict=verdict,
        thresholds={"compensated_ratio": HEADROOM, "lp_ratio": HEADROOM},
    )


def check_interpolated_decay(
    traj: Trajectory, p: float, theta: float, window: tuple[float, float] | None = None
) -> DecayFit:
    """Decay of ||grad u||_{p_theta} with 1/p_theta = (1-theta)/p: PASS when the
    fitted slope stays at most -d*theta/(4p) (+slack) or the compensated track
    obeys the headroom rule."""
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    d = traj.grid.dimension
    p_theta = p / (1.0 - theta)
    track = f"grad_L{p_theta:g}"
    t = traj.series.times
    if window is None:
        window = default_fit_window(traj.meta["solver"]["step"], float(t[-1]))
    bound = -d * theta / (4.0 * p)
    fit = _with_verdict(fit_exponent(traj.series, track, window), bound)
    if fit.verdict == "FAIL":
        sel = (t >= window[0]) & (t <= window[1])
        comp = t[sel] ** (-bound) * traj.series.column(track)[sel]
        if comp.max() <= HEADROOM * comp[0]:
            fit = DecayFit(**{**fit.to_dict(), "verdict": "PASS"})
    return fit


def check_growth(
    traj: Trajectory, p: float, window: tuple[float, float] | None = None
) -> tuple[DecayFit, DecayFit]:
    """Growth control of ||u||_p (bound slope 1/4) and ||u||_inf
    (bound slope 3/4 - d/(4p)), both against (1+t)."""
    d = traj.grid.dimension
    t = traj.series.times
    if window is None:
        window = default_fit_window(traj.meta["solver"]["step"], float(t[-1]))
    lo, hi = window
    if hi < lo * 10**1.5:
        raise ValueError(
            f"window [{lo}, {hi}] spans {np.log10(hi / lo):.2f} decades; need >= 1.5"
        )
    fit_p = _with_verdict(
        fit_exponent(traj.series, f"u_L{p:g}", window, against_one_plus_t=True),
        0.25,
    )
    fit_inf = _with_verdict(
        fit_exponent(traj.series, "u_Linf", window, against_one_plus_t=True),
        0.75 - d / (4.0 * p),
    )
    return fit_p, fit_inf


def coarsening_window(d: int) -> tuple[float, float]:
    """Admissible q range for the coarsening bound:
    max(1 + 2/d, (6+d)/(2+d)) < q < 1 + 4/d."""
    lo = max(1.0 + 2.0 / d, (6.0 + d) / (2.0 + d))
    return lo, 1.0 + 4.0 / d


def exponent_chain(d: int, q) -> dict:
    """The exponent arithmetic behind the coarsening bound, in exact
    rational arithmetic: q -> p = d(q-1)/2 -> theta = d(1/p - 1/2) ->
    bound (1-theta)/4 = 1/4 - d/(4p) + d/8, plus the reduced two-dimensional
    form 1/2 - 1/p and whether it matches the derived bound."""
    q = Fraction(q)
    d = int(d)
    p = Fraction(d) * (q - 1) / 2
    theta = Fraction(d) * (Fraction(1, 1) / p - Fraction(1, 2))
    bound = Fraction(1, 4) - Fraction(d, 1) / (4 * p) + Fraction(d, 8)
    d2_form = Fraction(1, 2) - 1 / p
    return {
        "d": d,
        "q": q,
        "p": p,
        "theta": theta,
        "bound": bound,
        "bound_from_theta": (1 - theta) / 4,
        "d2_reduced_form": d2_form,
        "d2_form_matches_bound": bool(d == 2 and d2_form == bound),
    }


def format_exponent_chain(chain: dict) -> str:
    lines = [
        f"q = {chain['q']}",
        f"p = d(q-1)/2 = {chain['p']}",
        f"theta = d(1/p - 1/2) = {chain['theta']}",
        f"bound = 1/4 - d/(4p) + d/8 = {chain['bound']} = (1-theta)/4 = "
        f"{chain['bound_from_theta']}",
    ]
    if chain["d"] == 2:
        lines.append(
            f"two-dimensional reduced form 1/2 - 1/p = {chain['d2_reduced_form']}; "
            f"matches bound: {chain['d2_form_matches_bound']}"
        )
    return "\n".join(lines)


@dataclass(frozen=True)
class CoarsenessReport:
    fit: DecayFit
    chain_text: str
    bound_slope: float
    d2_reduced_slope: float | None
    d2_form_matches_bound: bool | None
    q_window: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit"] = self.fit.to_dict()
        return d


def check_coarseness(
    traj: Trajectory, q: float, window: tuple[float, float] | None = None
) -> CoarsenessReport:
    """Growth slope of the coarseness ||u - mean||_2 against (1+t), compared
    with the derived bound exponent; the report carries the full exponent
    arithmetic chain and the two-dimensional reduced form."""
    d = traj.grid.dimension
    lo_q, hi_q = coarsening_window(d)
    if not (lo_q < q < hi_q):
        raise ValueError(
            f"q={q} outside the admissible coarsening window ({lo_q}, {hi_q}) for d={d}"
        )
    t = traj.series.times
    if window is None:
        window = default_fit_window(traj.meta["solver"]["step"], float(t[-1]))
    chain = exponent_chain(d, Fraction(q).limit_denominator(10**6))
    bound = float(chain["bound"])
    fit = _with_verdict(
        fit_exponent(traj.series, "coarseness", window, against_one_plus_t=True),
        bound,
    )
    return CoarsenessReport(
        fit=fit,
        chain_text=format_exponent_chain(chain),
        bound_slope=bound,
        d2_reduced_slope=float(chain["d2_reduced_form"]) if d == 2 else None,
        d2_form_matches_bound=chain["d2_form_matches_bound"] if d == 2 else None,
        q_window=(lo_q, hi_q),
    )
