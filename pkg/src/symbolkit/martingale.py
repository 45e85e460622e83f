"""Constant-expectation checks for the compensator structure of
simulated ensembles.

Local-martingale claims are tested as constant-expectation claims at
fixed grid times on bounded fixtures.  Conventions shared by the
checks:

* time integrals are trapezoidal along each path;
* a path killed during step ``kappa`` contributes a half-step
  ``g(X_{kappa-1}) dt / 2`` to compensator-type integrals (the kill
  lands mid-step on average, making the constant-rate case exact to
  O(dt^2));
* drift reconstruction integrates only over steps whose both endpoints
  are finite, matching the stored trajectory which freezes at the last
  finite sample;
* exploded and invalid paths are excluded, with counts reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .extended import Path, STATUS_DELTA, STATUS_FINITE, STATUS_INFINITY
from .serialize import dump_json
from .simulate import Ensemble
from .triplet import LevyTriplet, StateModel, eval_exponent

__all__ = [
    "TruncationDecomposition",
    "CheckReport",
    "truncate_jumps",
    "killing_compensator_check",
    "exponential_martingale_check",
    "canonical_representation_residual",
    "l_process",
]


@dataclass(frozen=True)
class TruncationDecomposition:
    """Split of a trajectory into its big-jump sum and the remainder.

    ``truncated + big_jump_part == values`` on the finite segment; the
    split routes whole grid increments larger than the truncation
    radius, so diffusion and jump contributions within one step are
    conflated at grid resolution.
    """

    times: np.ndarray
    truncated: np.ndarray        # X(h), includes the start value
    big_jump_part: np.ndarray    # running sum of big increments
    h_radius: float


def truncate_jumps(path: Path, h_radius: float) -> TruncationDecomposition:
    """Route grid increments with norm above ``h_radius`` into the
    big-jump series; the remainder keeps the start value."""
    finite = np.flatnonzero(path.status != STATUS_FINITE)
    end = int(finite[0]) if finite.size else len(path)
    vals = path.values[:end]
    times = path.times[:end]
    inc = np.diff(vals, axis=0)
    big = np.linalg.norm(inc, axis=1) > h_radius
    big_series = np.zeros_like(vals)
    big_series[1:] = np.cumsum(inc * big[:, None], axis=0)
    return TruncationDecomposition(
        times=times, truncated=vals - big_series, big_jump_part=big_series,
        h_radius=float(h_radius),
    )


@dataclass
class CheckReport:
    name: str
    t_grid: tuple[float, ...]
    rows: list[dict]
    passed: bool
    excluded_paths: int = 0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "t_grid": list(self.t_grid),
            "rows": self.rows,
            "passed": self.passed,
            "excluded_paths": self.excluded_paths,
            "notes": self.notes,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(dump_json(self.to_json()))


def _valid_mask(ens: Ensemble) -> np.ndarray:
    exploded = np.any(ens.status == STATUS_INFINITY, axis=1)
    return ~exploded & ~ens.invalid


def _kill_rate_fn(model: StateModel):
    """Killing rate as a function of the state; for coefficient-driven
    equations the rate sits on the driver."""
    if model.sde is not None:
        a = model.sde.driver.killing_rate
        return lambda xs: np.full(xs.shape[0], a)
    return model.kill.lenient


def _kill_index(ens: Ensemble) -> np.ndarray:
    """First grid index in the Delta state, or n_times if never killed."""
    killed = ens.status == STATUS_DELTA
    idx = np.where(killed.any(axis=1), killed.argmax(axis=1), ens.status.shape[1])
    return idx


def _stopped_values(ens: Ensemble) -> np.ndarray:
    """Trajectory frozen at the last finite sample (forward fill across
    cemetery states)."""
    vals = ens.values.copy()
    finite = ens.status == STATUS_FINITE
    n, m, d = vals.shape
    last = np.where(finite, np.arange(m)[None, :], -1)
    last = np.maximum.accumulate(last, axis=1)
    rows = np.arange(n)[:, None]
    safe = np.maximum(last, 0)
    out = vals[rows, safe, :]
    return out


def _field_on_paths(ens: Ensemble, fn, vec_dim: int = 0, dtype=float) -> np.ndarray:
    """Evaluate a vectorised state function on every finite sample;
    cemetery samples map to 0."""
    finite = ens.status == STATUS_FINITE
    flat = ens.values[finite]
    shape = ens.status.shape + ((vec_dim,) if vec_dim else ())
    out = np.zeros(shape, dtype=dtype)
    if flat.size:
        out[finite] = fn(flat)
    return out


def _cumtrap_zero_filled(vals: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid along axis 1 where cemetery samples carry
    value 0, producing the half-step kill convention automatically."""
    inc = 0.5 * (vals[:, 1:] + vals[:, :-1]) * dt
    out = np.zeros_like(vals)
    out[:, 1:] = np.cumsum(inc, axis=1)
    return out


def _cumtrap_pairwise(vals: np.ndarray, finite: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid over steps whose both endpoints are finite
    (no half step at the kill)."""
    pair = (finite[:, 1:] & finite[:, :-1]).astype(float)
    if vals.ndim == 3:
        pair = pair[:, :, None]
    inc = 0.5 * (vals[:, 1:] + vals[:, :-1]) * dt * pair
    out = np.zeros_like(vals)
    out[:, 1:] = np.cumsum(inc, axis=1)
    return out


def killing_compensator_check(ens: Ensemble, model: StateModel, t_grid) -> CheckReport:
    """Compare the empirical kill frequency P(zeta <= t) with the mean
    of the accumulated hazard integral(a(X_s) ds, s <= t and pre-kill);
    their difference is a mean-zero martingale evaluation."""
    t_grid = tuple(float(t) for t in t_grid)
    valid = _valid_mask(ens)
    n = int(valid.sum())
    if n == 0:
        raise ValueError("no valid paths")
    kill_idx = _kill_index(ens)[valid]
    a_vals = _field_on_paths(ens, _kill_rate_fn(model))[valid]
    A = _cumtrap_zero_filled(a_vals, ens.spec.dt)
    rows = []
    passed = True
    for t in t_grid:
        j = ens.time_index(t)
        indicator = (kill_idx <= j).astype(float)
        diff = indicator - A[:, j]
        mean = float(diff.mean())
        se = float(diff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        ok = abs(mean) <= 3.0 * se + 1e-12
        passed &= ok
        rows.append({
            "t": t,
            "kill_prob": float(indicator.mean()),
            "mean_compensator": float(A[:, j].mean()),
            "difference": mean,
            "stderr": se,
            "pass": ok,
        })
    return CheckReport(
        name="killing_compensator", t_grid=t_grid, rows=rows, passed=passed,
        excluded_paths=int((~valid).sum()),
    )


def l_process(ens: Ensemble, model: StateModel, u) -> np.ndarray:
    """Per-path compensator integrand accumulation

        L(u)_t = integral_0^{t ^ kill} (e^{i<u,1>} a(X_s) - p(X_s, u)) ds,

    the process integrated against e^{i<u, X_->} in the exponential
    compensation identity.  L(u)_0 = 0.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    phase_one = np.exp(1j * float(u.sum()))
    kill_rate = _kill_rate_fn(model)

    def rate(xs):
        p = model.symbol_many(xs, np.tile(u, (xs.shape[0], 1)))
        return phase_one * kill_rate(xs) - p

    dl = _field_on_paths(ens, rate, dtype=complex)
    return _cumtrap_zero_filled(dl, ens.spec.dt)


def exponential_martingale_check(ens: Ensemble, model, u, t_grid) -> CheckReport:
    """Constant-expectation test of the exponential compensation
    identity.

    Constant models: mean e_u(X_t - x0) * exp(t phi(u)) must equal 1.
    State-dependent models: the compensated process

        V_t = e^{i<u, H_t>} - integral e^{i<u, X_s>} dL(u)_s,
        H_t = X_t^{stopped} + 1 * [t >= kill time],

    must keep the constant mean V_0 = e^{i<u, x0>}.
    """
    if isinstance(model, LevyTriplet):
        model = StateModel.from_triplet(model)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    t_grid = tuple(float(t) for t in t_grid)
    valid = _valid_mask(ens)
    n = int(valid.sum())
    rows = []
    passed = True

    if model.is_constant:
        triplet = model.constant_triplet()
        phi = eval_exponent(triplet, u)
        for t in t_grid:
            e_vals = ens.e_xi_at(t, u)[valid]
            amp = np.exp(t * phi)
            stat = e_vals.mean() * amp
            se = math.sqrt((e_vals.real.var(ddof=1) + e_vals.imag.var(ddof=1)) / n) * abs(amp)
            ok = abs(stat - 1.0) <= 3.0 * se + 1e-12
            passed &= ok
            rows.append({"t": t, "statistic": complex(stat), "stderr": se, "pass": ok})
        name = "exponential_martingale_constant"
    else:
        dt = ens.spec.dt
        stopped = _stopped_values(ens)[valid]
        kill_idx = _kill_index(ens)[valid]
        m = ens.status.shape[1]
        killed_by = np.arange(m)[None, :] >= kill_idx[:, None]
        phase_x = np.exp(1j * (stopped @ u))
        h_phase = phase_x * np.where(killed_by, np.exp(1j * float(u.sum())), 1.0)

        kill_rate = _kill_rate_fn(model)

        def integrand(xs):
            p = model.symbol_many(xs, np.tile(u, (xs.shape[0], 1)))
            phase = np.exp(1j * (xs @ u))
            return phase * (np.exp(1j * float(u.sum())) * kill_rate(xs) - p)

        g_vals = _field_on_paths(ens, integrand, dtype=complex)[valid]
        G = _cumtrap_zero_filled(g_vals, dt)
        V = h_phase - G
        v0 = complex(np.exp(1j * float(ens.spec.x0 @ u)))
        for t in t_grid:
            j = ens.time_index(t)
            col = V[:, j]
            mean = complex(col.mean())
            se = math.sqrt((col.real.var(ddof=1) + col.imag.var(ddof=1)) / n)
            ok = abs(mean - v0) <= 3.0 * se + 1e-12
            passed &= ok
            rows.append({"t": t, "statistic": mean, "reference": v0,
                         "stderr": se, "pass": ok})
        name = "exponential_martingale_autonomous"

    return CheckReport(name=name, t_grid=t_grid, rows=rows, passed=passed,
                       excluded_paths=int((~valid).sum()))


def canonical_representation_residual(ens: Ensemble, model: StateModel,
                                      h_radius: float | None = None) -> CheckReport:
    """Reconstruct the drift integral and the big-jump sum from the
    sampled paths and verify that the leftover (the martingale part of
    the representation) has mean zero at each grid time."""
    if model.sde is not None:
        raise ValueError("canonical representation check expects an autonomous "
                         "or constant-coefficient model")
    if h_radius is None:
        h_radius = model.cutoff.support_radius
    valid = _valid_mask(ens)
    n = int(valid.sum())
    dt = ens.spec.dt
    finite = (ens.status == STATUS_FINITE)[valid]
    stopped = _stopped_values(ens)[valid]

    ell_vals = _field_on_paths(ens, model.drift, vec_dim=model.dim)[valid]
    B = _cumtrap_pairwise(ell_vals, finite, dt)

    inc = np.diff(stopped, axis=1)
    big = np.linalg.norm(inc, axis=2) > h_radius
    big_sum = np.zeros_like(stopped)
    big_sum[:, 1:] = np.cumsum(inc * big[:, :, None], axis=1)

    residual = stopped - ens.spec.x0[None, None, :] - B - big_sum

    t_grid = tuple(float(t) for t in ens.times[1:][:: max(1, (len(ens.times) - 1) // 8)])
    rows = []
    passed = True
    for t in t_grid:
        j = ens.time_index(t)
        col = residual[:, j, :]
        mean = col.mean(axis=0)
        se = col.std(axis=0, ddof=1) / math.sqrt(n)
        ok = bool(np.all(np.abs(mean) <= 3.0 * se + 1e-12))
        passed &= ok
        rows.append({
            "t": t,
            "mean_residual": [float(v) for v in mean],
            "stderr": [float(v) for v in se],
            "pass": ok,
        })
    return CheckReport(name="canonical_representation_residual", t_grid=t_grid,
                       rows=rows, passed=passed, excluded_paths=int((~valid).sum()),
                       notes=[f"h_radius={h_radius}"])
