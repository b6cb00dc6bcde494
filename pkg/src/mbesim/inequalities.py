"""Numerical toolbox for the integral inequalities behind the decay theory.

Covers the singular Beta-type integral, a comparison bound for integral
inequalities with a non-decreasing nonlinearity (Gronwall as the identity
special case), the self-referential bootstrap bound M <= c1 + c2*M^gamma,
and convolution / interpolation inequality spot checks on grid fields.
These routines check instances, not theorems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .spectral import Field, dilate, fractional_gradient_norm, lp_norm

__all__ = [
    "beta_integral_constant",
    "beta_time_integral",
    "BihariProblem",
    "BihariOutOfDomain",
    "bihari_bound",
    "bihari_blowup_time",
    "bihari_verify",
    "StraussCase",
    "StraussResult",
    "strauss_check",
    "strauss_fixed_point",
    "young_check",
    "gagliardo_spot_check",
]


# ---------------------------------------------------------------------------
# Beta-type singular integrals


def beta_integral_constant(a: float, b: float) -> float:
    """C(a,b) = integral_0^1 (1-u)^(-a) u^(-b) du for a < 1, b < 1.

    Splits at 1/2 and substitutes away each endpoint singularity
    analytically, then integrates the smooth remainders adaptively.
    """
    if a >= 1 or b >= 1:
        raise ValueError(f"integral diverges unless a < 1 and b < 1, got a={a}, b={b}")

    # left half: u = tau^(1/(1-b)) turns u^(-b) du into d tau / (1-b)
    def left(tau):
        u = tau ** (1.0 / (1.0 - b))
        return (1.0 - u) ** (-a) / (1.0 - b)

    # right half mirrors with the roles of a and b swapped
    def right(tau):
        v = tau ** (1.0 / (1.0 - a))
        return (1.0 - v) ** (-b) / (1.0 - a)

    tl = 0.5 ** (1.0 - b)
    tr = 0.5 ** (1.0 - a)
    vl, _ = integrate.quad(left, 0.0, tl, epsabs=1e-13, epsrel=1e-12, limit=200)
    vr, _ = integrate.quad(right, 0.0, tr, epsabs=1e-13, epsrel=1e-12, limit=200)
    return vl + vr


def beta_time_integral(a: float, b: float, t: float) -> float:
    """integral_0^t (t-s)^(-a) s^(-b) ds by direct singularity-split quadrature.

    Deliberately does not use the collapse identity, so scaling tests
    against t^(1-a-b) are non-trivial.
    """
    if a >= 1 or b >= 1:
        raise ValueError(f"integral diverges unless a < 1 and b < 1, got a={a}, b={b}")
    if not t > 0:
        raise ValueError("t must be positive")
    half = t / 2.0

    def left(tau):  # s = tau^(1/(1-b)), s in (0, t/2)
        s = tau ** (1.0 / (1.0 - b))
        return (t - s) ** (-a) / (1.0 - b)

    def right(tau):  # t - s = tau^(1/(1-a)), s in (t/2, t)
        w = tau ** (1.0 / (1.0 - a))
        return (t - w) ** (-b) / (1.0 - a)

    tl = half ** (1.0 - b)
    tr = half ** (1.0 - a)
    vl, _ = integrate.quad(left, 0.0, tl, epsabs=1e-13, epsrel=1e-12, limit=200)
    vr, _ = integrate.quad(right, 0.0, tr, epsabs=1e-13, epsrel=1e-12, limit=200)
    return vl + vr


# ---------------------------------------------------------------------------
# comparison bound for g <= k + M * int h(s) omega(g(s)) ds


class BihariOutOfDomain(Exception):
    """The bound formula left the invertibility domain of Omega (blow-up side)."""


@dataclass(frozen=True)
class BihariProblem:
    """Data of the integral inequality g <= k + M int_a^t h(s) omega(g(s)) ds.

    * ``h`` is tabulated as (nodes, values), piecewise linear, values >= 0,
      so its running integral is exact.
    * ``omega`` is ("identity",), ("power", gamma), or ("table", nodes, values)
      with monotone piecewise-linear interpolation.
    * ``u0_anchor`` > 0 anchors Omega(u) = int_{u0}^{u} dy/omega(y).
    """

    k: float
    scale: float  # the constant M in front of the integral
    h_nodes: tuple[float, ...]
    h_values: tuple[float, ...]
    omega: tuple
    u0_anchor: float = 1.0

    def __post_init__(self):
        if self.k < 0 or self.scale < 0:
            raise ValueError("k and the integral scale must be non-negative")
        nodes = np.asarray(self.h_nodes, float)
        vals = np.asarray(self.h_values, float)
        if nodes.size < 2 or nodes.size != vals.size:
            raise ValueError("h table needs matching nodes/values, at least 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("h nodes must be strictly increasing")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("h values must be finite and non-negative")
        if not self.u0_anchor > 0:
            raise ValueError("u0_anchor must be positive")
        kind = self.omega[0]
        if kind == "power":
            if not self.omega[1] > 0:
                raise ValueError("power exponent must be positive")
        elif kind == "table":
            on = np.asarray(self.omega[1], float)
            ov = np.asarray(self.omega[2], float)
            if np.any(np.diff(on) <= 0) or np.any(np.diff(ov) < 0) or np.any(ov < 0):
                raise ValueError("omega table must be increasing nodes, "
                                 "non-decreasing non-negative values")
        elif kind != "identity":
            raise ValueError(f"unknown omega kind {kind!r}")

    @property
    def interval(self) -> tuple[float, float]:
        return self.h_nodes[0], self.h_nodes[-1]

    def omega_at(self, u):
        u = np.asarray(u, float)
        kind = self.omega[0]
        if kind == "identity":
            return u
        if kind == "power":
            with np.errstate(over="ignore"):  # saturating to inf is fine: 1/omega -> 0
                return u ** self.omega[1]
        nodes = np.asarray(self.omega[1], float)
        vals = np.asarray(self.omega[2], float)
        return np.interp(u, nodes, vals)

    def omega_domain_cap(self) -> float:
        """Largest u at which omega is defined (table end), else +inf."""
        if self.omega[0] == "table":
            return float(self.omega[1][-1])
        return np.inf

    def h_at(self, t):
        return np.interp(t, self.h_nodes, self.h_values)

    def h_integral(self, t) -> float:
        """Exact running integral of the piecewise-linear h from a to t."""
        nodes = np.asarray(self.h_nodes, float)
        vals = np.asarray(self.h_values, float)
        t = float(t)
        if t < nodes[0] - 1e-12 or t > nodes[-1] + 1e-12:
            raise ValueError(f"t={t} outside tabulated interval {self.interval}")
        t = min(max(t, nodes[0]), nodes[-1])
        seg = np.searchsorted(nodes, t, side="right") - 1
        seg = min(seg, nodes.size - 2)
        widths = np.diff(nodes[: seg + 1])
        total = float(np.sum(0.5 * (vals[:seg] + vals[1 : seg + 1]) * widths))
        dt = t - nodes[seg]
        if dt > 0:
            h_t = vals[seg] + (vals[seg + 1] - vals[seg]) * dt / (
                nodes[seg + 1] - nodes[seg]
            )
            total += 0.5 * (vals[seg] + h_t) * dt
        return total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


class _OmegaMachine:
    """Omega(u) = int_{u0}^{u} dy/omega(y) by composite quadrature on a
    cached monotone grid, with invertibility by honest bisection."""

    def __init__(self, prob: BihariProblem, u_hi_hint: float):
        self.prob = prob
        lo_candidates = [prob.u0_anchor]
        if prob.k > 0:
            lo_candidates.append(prob.k)
        self.u_lo = 0.5 * min(lo_candidates)
        cap = prob.omega_domain_cap()
        hi = max(prob.u0_anchor, prob.k, u_hi_hint) * 4.0
        self.u_cap = cap
        self.u_hi = min(hi, cap)
        if self._omega_min_on([self.u_lo, self.u_hi]) <= 0.0:
            raise ValueError(
                "omega vanishes on the integration range: Omega divergent"
            )
        self._build_grid()

    def _omega_min_on(self, bracket):
        us = np.geomspace(max(bracket[0], 1e-300), bracket[1], 512)
        return float(np.min(self.prob.omega_at(us)))

    def _build_grid(self):
        grid = np.geomspace(self.u_lo, self.u_hi, 4097)
        if self.prob.omega[0] == "table":
            knots = np.asarray(self.prob.omega[1], float)
            knots = knots[(knots > self.u_lo) & (knots < self.u_hi)]
            grid = np.unique(np.concatenate([grid, knots]))
        self.u_grid = grid
        raw = np.concatenate([[0.0], np.cumsum(self._segment_integrals(grid))])
        # shift so Omega(u0_anchor) = 0
        i = int(np.searchsorted(grid, self.prob.u0_anchor, side="right") - 1)
        i = min(max(i, 0), grid.size - 2)
        anchor = raw[i] + self._gl(grid[i], self.prob.u0_anchor)
        self.Omega_grid = raw - anchor

    def _segment_integrals(self, grid):
        lo = grid[:-1][:, None]
        hi = grid[1:][:, None]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        ys = mid + half * _GL_NODES[None, :]
        vals = 1.0 / self.prob.omega_at(ys)
        return (vals * _GL_WEIGHTS[None, :]).sum(axis=1) * half[:, 0]

    def _gl(self, lo: float, hi: float) -> float:
        if hi == lo:
            return 0.0
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        ys = mid + half * _GL_NODES
        return float((_GL_WEIGHTS / self.prob.omega_at(ys)).sum() * half)

    def value(self, u: float) -> float:
        u = float(u)
        if u < self.u_lo:
            raise ValueError(
                f"Omega({u}) outside the constructed domain [{self.u_lo}, {self.u_hi}]"
            )
        while u > self.u_hi:
            self._extend()
        i = np.searchsorted(self.u_grid, u, side="right") - 1
        i = min(max(i, 0), self.u_grid.size - 2)
        return float(self.Omega_grid[i] + self._gl(self.u_grid[i], u))

    def _extend(self):
        if self.u_hi >= self.u_cap:
            raise BihariOutOfDomain(
                f"omega only defined up to u={self.u_cap}; Omega range exhausted"
            )
        new_hi = min(self.u_hi * 4.0, self.u_cap)
        ext = np.geomspace(self.u_hi, new_hi, 513)[1:]
        segs = self._segment_integrals(
            np.concatenate([[self.u_grid[-1]], ext])
        )
        self.u_grid = np.concatenate([self.u_grid, ext])
        self.Omega_grid = np.concatenate(
            [self.Omega_grid, self.Omega_grid[-1] + np.cumsum(segs)]
        )
        self.u_hi = new_hi

    def range_sup(self) -> float:
        """Supremum of Omega over its domain: finite iff 1/omega is integrable
        at the domain top (power gamma > 1) or the table ends."""
        kind = self.prob.omega[0]
        if kind == "identity":
            return np.inf
        if kind == "power":
            gamma = self.prob.omega[1]
            if gamma <= 1:
                return np.inf
            val, _ = integrate.quad(
                lambda y: y**-gamma, self.prob.u0_anchor, np.inf,
                epsabs=1e-14, epsrel=1e-13,
            )
            return float(val)
        return self.value(self.prob.omega_domain_cap())

    def inverse(self, y: float) -> float:
        """Omega^{-1}(y) by bisection on the monotone cached table."""
        sup = self.range_sup()
        if y >= sup:
            raise BihariOutOfDomain(
                f"target {y:.6g} >= sup Omega = {sup:.6g}: bound left the domain"
            )
        while y > self.Omega_grid[-1]:
            self._extend()
        if y < self.Omega_grid[0]:
            raise ValueError(
                f"target {y:.6g} below Omega({self.u_lo}); shrink u_lo or raise k"
            )
        i = int(np.searchsorted(self.Omega_grid, y, side="right") - 1)
        i = min(max(i, 0), self.u_grid.size - 2)
        lo, hi = float(self.u_grid[i]), float(self.u_grid[i + 1])
        base = float(self.Omega_grid[i])
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if base + self._gl(self.u_grid[i], mid) < y:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)


def _omega_machine(prob: BihariProblem) -> _OmegaMachine:
    return _OmegaMachine(prob, u_hi_hint=max(prob.k, prob.u0_anchor) * 8.0)


def bihari_bound(prob: BihariProblem, t: float):
    """Comparison bound Omega^{-1}(Omega(k) + M int_a^t h) at time t.

    Raises BihariOutOfDomain once the argument leaves the range of Omega
    (the formula's own blow-up), and ValueError when Omega(k) is undefined
    (k = 0 with a nonlinearity vanishing at 0 must be taken as a limit).
    """
    if prob.k == 0.0:
        raise ValueError(
            "Omega(0) is undefined for the supported omega families; "
            "study k -> 0+ by passing small positive k"
        )
    machine = _omega_machine(prob)
    target = machine.value(prob.k) + prob.scale * prob.h_integral(t)
    return machine.inverse(target)


def bihari_blowup_time(prob: BihariProblem, tol: float = 1e-9):
    """Earliest t in [a,b] where the bound leaves the domain, by bisection;
    None if the bound exists through b."""
    a, b = prob.interval
    machine = _omega_machine(prob)
    sup = machine.range_sup()
    base = machine.value(prob.k)

    def out(t):
        return base + prob.scale * prob.h_integral(t) >= sup

    if not out(b):
        return None
    if out(a):
        return a
    lo, hi = a, b
    while hi - lo > tol * max(1.0, abs(b)):
        mid = 0.5 * (lo + hi)
        if out(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _rk4_equality_ode(prob: BihariProblem, start: float, driver_nodes, driver_vals,
                      t_eval: np.ndarray) -> np.ndarray:
    """Integrate V' = M h(t) beta(t) omega(V), V(a) = start, with RK4 steps
    aligned to the h and driver knots (the integrand is smooth inside)."""
    knots = np.unique(
        np.concatenate([np.asarray(prob.h_nodes, float), np.asarray(driver_nodes, float),
                        t_eval])
    )

    def rhs(t, v):
        beta = np.interp(t, driver_nodes, driver_vals)
        return prob.scale * prob.h_at(t) * beta * float(prob.omega_at(v))

    out = np.empty(t_eval.size)
    pos = 0
    v = float(start)
    t_prev = knots[0]
    if t_eval[0] == t_prev:
        out[0] = v
        pos = 1
    for t_next in knots[1:]:
        seg = t_next - t_prev
        n_sub = max(4, int(np.ceil(seg / 1e-3)))
        dt = seg / n_sub
        for i in range(n_sub):
            t = t_prev + i * dt
            k1 = rhs(t, v)
            k2 = rhs(t + dt / 2, v + dt / 2 * k1)
            k3 = rhs(t + dt / 2, v + dt / 2 * k2)
            k4 = rhs(t + dt, v + dt * k3)
            v += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        while pos < t_eval.size and abs(t_eval[pos] - t_next) <= 1e-12:
            out[pos] = v
            pos += 1
        t_prev = t_next
    if pos != t_eval.size:
        raise RuntimeError("evaluation points not aligned with integration knots")
    return out


def bihari_verify(prob: BihariProblem, trials: int, seed: int = 0,
                  samples: int = 100) -> dict:
    """Stress the bound with trajectories satisfying the hypothesis by
    construction: solve the equality ODE with a randomly shrunk driver
    (trial 0 keeps the exact equality solution) and compare pointwise.

    Returns the worst signed violation g - bound over all trials/samples;
    a correct bound keeps it at quadrature-noise level.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if prob.k <= 0:
        raise ValueError("verification needs k > 0 (k = 0 only as a limit study)")
    rng = np.random.default_rng(seed)
    a, b = prob.interval
    machine = _omega_machine(prob)
    base = machine.value(prob.k)
    sup = machine.range_sup()
    # keep the sample window where the bound surely exists
    t_hi = b
    if base + prob.scale * prob.h_integral(b) >= sup:
        t_hi = bihari_blowup_time(prob)
        t_hi = a + 0.9 * (t_hi - a)
    t_eval = np.linspace(a, t_hi, samples)
    bounds = np.array(
        [machine.inverse(base + prob.scale * prob.h_integral(t)) for t in t_eval]
    )
    worst = -np.inf
    equality_gap = None
    driver_nodes = np.linspace(a, b, 17)
    for trial in range(trials):
        if trial == 0:
            beta = np.ones_like(driver_nodes)
            start = prob.k
        else:
            beta = rng.uniform(0.2, 1.0, size=driver_nodes.size)
            start = prob.k * rng.uniform(0.3, 1.0)
        g = _rk4_equality_ode(prob, start, driver_nodes, beta, t_eval)
        viol = float(np.max(g - bounds))
        worst = max(worst, viol)
        if trial == 0:
            equality_gap = float(np.max(np.abs(g - bounds)))
    return {
        "trials": trials,
        "seed": seed,
        "samples": samples,
        "t_window": [float(a), float(t_hi)],
        "max_violation": worst,
        "equality_trial_gap": equality_gap,
        "problem": {
            "k": prob.k,
            "M": prob.scale,
            "omega": list(prob.omega[:1]) + [float(v) for v in prob.omega[1:]]
            if prob.omega[0] == "power"
            else [prob.omega[0]],
            "interval": list(prob.interval),
        },
    }


# ---------------------------------------------------------------------------
# the bootstrap bound M <= c1 + c2 M^gamma


@dataclass(frozen=True)
class StraussCase:
    c1: float
    c2: float
    gamma: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("c1 and c2 must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")


@dataclass(frozen=True)
class StraussResult:
    condition_holds: bool
    bound: float
    threshold_lhs: float
    threshold_rhs: float


def strauss_check(case: StraussCase) -> StraussResult:
    """Evaluate the smallness condition c1*c2^(1/(gamma-1)) <
    (1 - 1/gamma)*gamma^(-1/(gamma-1)) and the bound c1/(1 - 1/gamma)."""
    inv = 1.0 / (case.gamma - 1.0)
    lhs = case.c1 * case.c2**inv
    rhs = (1.0 - 1.0 / case.gamma) * case.gamma ** (-inv)
    return StraussResult(
        condition_holds=bool(lhs < rhs),
        bound=case.c1 / (1.0 - 1.0 / case.gamma),
        threshold_lhs=float(lhs),
        threshold_rhs=float(rhs),
    )


def strauss_fixed_point(case: StraussCase, tol: float = 1e-13,
                        max_iter: int = 100_000):
    """Limit of m <- c1 + c2 m^gamma from m=0: the smallest non-negative
    root when one exists, else None (the iteration escapes)."""
    m = 0.0
    escape = 10.0 * case.c1 / max(1e-12, 1.0 - 1.0 / case.gamma)
    for _ in range(max_iter):
        m_next = case.c1 + case.c2 * m**case.gamma
        if m_next > escape or not np.isfinite(m_next):
            return None
        if abs(m_next - m) <= tol * max(1.0, m_next):
            return float(m_next)
        m = m_next
    return float(m)


# ---------------------------------------------------------------------------
# convolution and interpolation spot checks


def young_check(f: Field, g: Field, p: float, q: float) -> dict:
    """Periodic convolution inequality ||f*g||_r <= ||f||_p ||g||_q with
    1/r = 1/p + 1/q - 1; returns the measured slack."""
    if f.grid != g.grid:
        raise ValueError("fields must share a grid")
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    inv_r = inv_p + inv_q - 1.0
    if inv_r < -1e-12:
        raise ValueError(f"need 1/p + 1/q >= 1, got 1/p+1/q = {inv_p + inv_q}")
    r = np.inf if inv_r <= 1e-15 else 1.0 / inv_r
    conv = np.fft.ifftn(np.fft.fftn(f.samples) * np.fft.fftn(g.samples)).real
    conv_field = Field(f.grid, conv * f.grid.cell_volume)
    lhs = lp_norm(conv_field, r)
    rhs = lp_norm(f, p) * lp_norm(g, q)
    return {
        "p": p, "q": q, "r": r,
        "lhs": lhs, "rhs": rhs,
        "slack": rhs - lhs,
        "holds": bool(lhs <= rhs * (1.0 + 1e-10)),
    }


def gagliardo_spot_check(u: Field, p: float, q: float, s: float, theta: float,
                         scales=(1, 2, 4)) -> dict:
    """Empirical constant in ||u||_q <= C ||u||_p^(1-theta) ||u||_{W^{s,p}-dot}^theta
    for exponents with 1/q = 1/p - theta*s/d, and its stability across the
    re-indexing scale family u(lam x)."""
    d = u.grid.dimension
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0, 1)")
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    if abs(inv_q - (1.0 / p - theta * s / d)) > 1e-10:
        raise ValueError(
            f"exponent relation violated: 1/q = {inv_q}, 1/p - theta*s/d = "
            f"{1.0 / p - theta * s / d}"
        )
    if not p > 1:
        raise ValueError("need p > 1")

    def ratio_of(field: Field) -> float:
        num = lp_norm(field, q)
        den = lp_norm(field, p) ** (1.0 - theta) * fractional_gradient_norm(
            field, s, p
        ) ** theta
        if den == 0.0:
            raise ValueError("degenerate field: zero denominator")
        return num / den

    ratios = {}
    for lam in scales:
        ratios[int(lam)] = ratio_of(dilate(u, lam) if lam != 1 else u)
    base = ratios[1]
    spread = max(abs(v - base) / base for v in ratios.values())
    if not np.isfinite(base):
        raise ValueError("non-finite interpolation ratio")
    return {
        "p": p, "q": q, "s": s, "theta": theta,
        "ratio": base,
        "ratios_by_scale": ratios,
        "max_scale_variation": spread,
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, default=float)
