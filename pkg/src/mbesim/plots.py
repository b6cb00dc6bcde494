"""SVG figure rendering for persisted runs and reports.

Each tracked norm becomes one line chart named after the track; tracks with
a fitted exponent are drawn log-log with the fit overlaid.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .solver import NormSeries

__all__ = ["render_series_plots", "render_loglog_fit", "render_scan_plot"]


def _safe_name(track: str) -> str:
    return track.replace("/", "_")


def render_series_plots(series: NormSeries, outdir, fits: dict | None = None) -> list[Path]:
    """One SVG per track; fitted tracks are drawn log-log with the fit line.

    ``fits`` maps track name to a dict with keys slope/intercept/window and
    optionally against_one_plus_t (the fit_exponent output shape).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fits = fits or {}
    written = []
    t = series.times
    for track in sorted(series.columns):
        y = series.columns[track]
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        fit = fits.get(track)
        if fit is not None:
            shifted = bool(fit.get("against_one_plus_t"))
            x = 1.0 + t if shifted else t
            pos = (x > 0) & (y > 0)
            ax.loglog(x[pos], y[pos], lw=1.2, label=track)
            lo, hi = fit["window"]
            xw = np.geomspace(max(lo + (1.0 if shifted else 0.0), x[pos].min()),
                              hi + (1.0 if shifted else 0.0), 64)
            ax.loglog(
                xw,
                np.exp(fit["intercept"]) * xw ** fit["slope"],
                "--",
                lw=1.0,
                label=f"slope {fit['slope']:+.3f}",
            )
            ax.set_xlabel("1 + t" if shifted else "t")
        else:
            ax.plot(t, y, lw=1.2, label=track)
            ax.set_xlabel("t")
        ax.set_ylabel(track)
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        path = outdir / f"{_safe_name(track)}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def render_loglog_fit(times, values, slope, intercept, label, path) -> Path:
    """Standalone log-log chart for a fitted scaling law (kernel norms etc.)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.loglog(times, values, "o", ms=4, label=label)
    ax.loglog(times, np.exp(intercept) * times**slope, "--", lw=1.0,
              label=f"fit slope {slope:+.4f}")
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_scan_plot(scan: dict, path) -> Path:
    """Amplitude-scan outcomes against the initial gradient norm."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for outcome, marker in (("PASS", "o"), ("FAIL", "x"), ("BLOWUP", "s"),
                            ("STEP_FAILURE", "d")):
        rows = [r for r in scan["rows"] if r["outcome"] == outcome]
        if rows:
            ax.semilogx(
                [r["amplitude"] for r in rows],
                [r["grad_lp_initial"] for r in rows],
                marker,
                label=outcome,
            )
    ax.set_xlabel("amplitude")
    ax.set_ylabel("initial ||grad u||_p")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
