"""Monte-Carlo estimation of the probabilistic symbol.

The estimator freezes each path at its first grid exit from the closed
ball of radius ``k_radius`` around the start point, evaluates
e_xi(X_t - x) with cemetery states contributing zero, and forms

    p_hat(t) = -(mean - 1) / t

on a decreasing time ladder.  The estimator carries an O(t) bias, so a
least-squares line through the ladder is extrapolated to t = 0.  All
rungs reuse the same trajectories (nested prefixes), and the intercept
standard error is computed from per-path linear-combination values so
the rung correlation is accounted for exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .serialize import dump_json, write_csv
from .simulate import PathSampler
from .triplet import eval_symbol

__all__ = [
    "ProbeSettings",
    "SymbolReport",
    "IndependenceReport",
    "ProbeImmediateExitError",
    "estimate_symbol",
    "symbol_independence_check",
]

EXIT_FRACTION_LIMIT = 0.999


class ProbeImmediateExitError(RuntimeError):
    """Effectively every path left the stopping ball within one step;
    the radius is too small for the step size."""


@dataclass(frozen=True)
class ProbeSettings:
    k_radius: float = 1.0
    t_ladder: tuple[float, ...] = (0.04, 0.02, 0.01, 0.005)
    n_samples: int = 10_000
    extrapolate: bool = True
    dt: float | None = None  # default: min(t_ladder) / 50

    def __post_init__(self):
        tl = tuple(float(t) for t in self.t_ladder)
        if any(t <= 0 for t in tl) or any(a <= b for a, b in zip(tl, tl[1:])):
            raise ValueError("t_ladder must be strictly decreasing and positive")
        if not self.k_radius > 0:
            raise ValueError("k_radius must be positive")
        object.__setattr__(self, "t_ladder", tl)

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else min(self.t_ladder) / 50.0


@dataclass
class SymbolReport:
    x: np.ndarray
    xi: np.ndarray
    analytic: complex | None
    t_ladder: tuple[float, ...]
    estimates: list[complex]
    stderrs: list[float]
    extrapolated: complex
    extrapolated_stderr: float
    abs_error: float | None = None
    rel_error: float | None = None
    low_confidence: bool = False
    settings: ProbeSettings | None = None

    def to_json(self) -> dict:
        return {
            "x": [float(v) for v in np.atleast_1d(self.x)],
            "xi": [float(v) for v in np.atleast_1d(self.xi)],
            "analytic": None if self.analytic is None else complex(self.analytic),
            "ladder": [
                {"t": t, "estimate": complex(p), "stderr": s}
                for t, p, s in zip(self.t_ladder, self.estimates, self.stderrs)
            ],
            "extrapolated": complex(self.extrapolated),
            "extrapolated_stderr": self.extrapolated_stderr,
            "abs_error": self.abs_error,
            "rel_error": self.rel_error,
            "low_confidence": self.low_confidence,
            "settings": None if self.settings is None else {
                "k_radius": self.settings.k_radius,
                "t_ladder": list(self.settings.t_ladder),
                "n_samples": self.settings.n_samples,
                "extrapolate": self.settings.extrapolate,
                "dt": self.settings.step,
            },
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(dump_json(self.to_json()))


def _complex_stderr(samples: np.ndarray) -> float:
    n = samples.shape[0]
    return math.sqrt((samples.real.var(ddof=1) + samples.imag.var(ddof=1)) / n)


def estimate_symbol(sampler: PathSampler, x, xi, settings: ProbeSettings) -> SymbolReport:
    """Estimate p(x, xi) from stopped small-time increments.

    Raises ProbeImmediateExitError when the exit ball loses essentially
    all paths within the first step.  A report whose combined stderr
    exceeds the estimate magnitude is flagged low-confidence.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    dt = settings.step
    stop_radius = settings.k_radius if math.isfinite(settings.k_radius) else None
    actual, values, status, frozen_first = sampler.snapshots(
        x, sorted(settings.t_ladder), settings.n_samples, dt=dt,
        stop_center=x if stop_radius is not None else None,
        stop_radius=stop_radius,
    )
    if frozen_first >= EXIT_FRACTION_LIMIT * settings.n_samples:
        raise ProbeImmediateExitError(
            f"{frozen_first} of {settings.n_samples} paths left the radius-"
            f"{settings.k_radius} ball in the first step; increase k_radius or shrink dt")

    e_by_time = {}
    for k, t in enumerate(actual):
        phase = np.exp(1j * ((values[k] - x) @ xi))
        phase[status[k] != 0] = 0.0
        e_by_time[float(t)] = phase
    ladder = sorted(e_by_time, reverse=True)

    estimates, stderrs = [], []
    for t in ladder:
        p_hat = -(e_by_time[t].mean() - 1.0) / t
        estimates.append(complex(p_hat))
        stderrs.append(_complex_stderr(e_by_time[t]) / t)

    if settings.extrapolate and len(ladder) >= 2:
        ts = np.asarray(ladder)
        design = np.stack([np.ones_like(ts), ts], axis=1)
        # intercept weights of the least-squares line fit
        hat = np.linalg.pinv(design.T @ design) @ design.T
        w0 = hat[0]
        # per-path contribution to the intercept captures rung correlation
        per_path = sum(w0[k] * (-(e_by_time[t] - 1.0) / t) for k, t in enumerate(ladder))
        extrapolated = complex(per_path.mean())
        ex_stderr = _complex_stderr(per_path)
    else:
        extrapolated = estimates[-1]
        ex_stderr = stderrs[-1]

    analytic = complex(eval_symbol(sampler.model, x, xi))
    abs_err = abs(extrapolated - analytic)
    rel_err = abs_err / abs(analytic) if abs(analytic) > 1e-8 else None
    return SymbolReport(
        x=x, xi=xi, analytic=analytic, t_ladder=tuple(ladder),
        estimates=estimates, stderrs=stderrs,
        extrapolated=extrapolated, extrapolated_stderr=ex_stderr,
        abs_error=abs_err, rel_error=rel_err,
        low_confidence=ex_stderr > abs(extrapolated),
        settings=settings,
    )


@dataclass
class IndependenceReport:
    radii: tuple[float, ...]
    reports: list[SymbolReport]
    max_pair_z: float
    consistent: bool

    def to_json(self) -> dict:
        return {
            "radii": list(self.radii),
            "reports": [r.to_json() for r in self.reports],
            "max_pair_z": self.max_pair_z,
            "consistent": self.consistent,
        }


def symbol_independence_check(sampler: PathSampler, x, xi, radii,
                              settings: ProbeSettings | None = None) -> IndependenceReport:
    """Probe the same (x, xi) with several exit-ball radii; estimates
    must agree pairwise within 3 combined standard errors."""
    radii = tuple(float(r) for r in radii)
    if len(set(radii)) != len(radii):
        raise ValueError("radii must be distinct")
    base = settings if settings is not None else ProbeSettings()
    reports = [estimate_symbol(sampler, x, xi, replace(base, k_radius=r))
               for r in radii]
    max_z = 0.0
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            se = math.hypot(reports[i].extrapolated_stderr, reports[j].extrapolated_stderr)
            diff = abs(reports[i].extrapolated - reports[j].extrapolated)
            if se > 0:
                max_z = max(max_z, diff / se)
            elif diff > 0:
                max_z = math.inf
    return IndependenceReport(radii=radii, reports=reports,
                              max_pair_z=max_z, consistent=max_z <= 3.0)


def write_grid_csv(path, reports: list[SymbolReport]) -> None:
    """Flat CSV table of probe results over a frequency grid."""
    rows = []
    for r in reports:
        rows.append(list(np.atleast_1d(r.x)) + list(np.atleast_1d(r.xi)) + [
            r.analytic.real if r.analytic is not None else float("nan"),
            r.analytic.imag if r.analytic is not None else float("nan"),
            r.extrapolated.real, r.extrapolated.imag,
            r.extrapolated_stderr,
            r.rel_error if r.rel_error is not None else float("nan"),
        ])
    d = len(np.atleast_1d(reports[0].x))
    header = [f"x{i+1}" for i in range(d)] + [f"xi{i+1}" for i in range(d)] + [
        "analytic_re", "analytic_im", "estimate_re", "estimate_im", "stderr", "rel_error"]
    write_csv(path, header, rows)
