"""Path ensemble generation.

A single vectorised stepping kernel drives three entry points:

* ``sample_levy`` -- constant triplet, exact-in-law increments per step
  (Gaussian part, Poisson counts per atom, stable increments) and an
  exact exponential killing clock when the killing rate is positive;
* ``sample_autonomous`` -- Euler scheme freezing the state-dependent
  triplet at the left endpoint of each step, with hazard killing
  (probability 1 - exp(-abar dt) per step, abar the endpoint average)
  and absorption at the explosion threshold;
* ``sample_sde`` -- Euler scheme dX = f(X) dZ against a constant driver.

Determinism contract: draws come from per-(seed, purpose, chunk)
substreams with a fixed chunk size, so results are bit-identical for a
given spec and seed regardless of worker count, and ensembles sharing a
seed share path prefixes chunk by chunk.  The environment variable
SYMBOLKIT_THREADS caps the number of chunk workers.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .extended import (
    Path,
    STATUS_DELTA,
    STATUS_FINITE,
    STATUS_INFINITY,
)
from .serialize import dump_json
from .triplet import (
    ConstantMeasureFamily,
    Coefficient,
    DensityMeasure,
    DiscreteMeasure,
    DiscreteMeasureFamily,
    LevyTriplet,
    StableMeasure,
    StableMeasureFamily,
    StateModel,
    ZeroMeasure,
)
from .expr import Expression

__all__ = [
    "SimSpec",
    "Ensemble",
    "PathSampler",
    "sample_levy",
    "sample_autonomous",
    "sample_sde",
    "snapshot_run",
    "running_max_run",
]

CHUNK_SIZE = 1 << 14

# stream purposes
_P_GAUSS, _P_JUMP, _P_STABLE, _P_HAZARD, _P_CLOCK, _P_SMALL = range(1, 7)
_PURPOSES = {
    "gauss": _P_GAUSS,
    "jump": _P_JUMP,
    "stable": _P_STABLE,
    "hazard": _P_HAZARD,
    "clock": _P_CLOCK,
    "small": _P_SMALL,
}


def _worker_count() -> int:
    raw = os.environ.get("SYMBOLKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SimSpec:
    """Ensemble parameters; the model is passed to the sampling call."""

    x0: np.ndarray
    horizon: float
    dt: float
    n_paths: int
    rng_seed: int = 0
    explosion_threshold: float = 1e9
    small_jump_cut: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least one step")
        if self.n_paths < 1:
            raise ValueError("need at least one path")
        if not self.explosion_threshold > float(np.linalg.norm(self.x0)):
            raise ValueError("explosion threshold must exceed |x0|")

    @property
    def n_steps(self) -> int:
        steps = round(self.horizon / self.dt)
        if abs(steps * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ValueError("horizon must be an integer multiple of dt")
        return int(steps)

    def to_json(self) -> dict:
        return {
            "x0": [float(v) for v in self.x0],
            "horizon": self.horizon,
            "dt": self.dt,
            "n_paths": self.n_paths,
            "rng_seed": self.rng_seed,
            "explosion_threshold": self.explosion_threshold,
            "small_jump_cut": self.small_jump_cut,
        }


class Ensemble:
    """Simulated paths on a shared time grid, columnar storage."""

    def __init__(self, times, values, status, spec: SimSpec, seed_ledger,
                 invalid=None, model_name: str = "model", bias_notes=None):
        self.times = np.asarray(times, dtype=float)
        self.values = values          # (n, m, d)
        self.status = status          # (n, m) int8
        self.spec = spec
        self.seed_ledger = seed_ledger
        self.invalid = invalid if invalid is not None else np.zeros(values.shape[0], bool)
        self.model_name = model_name
        self.bias_notes = bias_notes or {}

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def invalid_count(self) -> int:
        return int(self.invalid.sum())

    def path(self, i: int) -> Path:
        return Path(self.times, self.values[i], self.status[i],
                    dt=self.spec.dt, validate=False)

    def time_index(self, t: float) -> int:
        i = int(round(t / self.spec.dt))
        if not math.isclose(i * self.spec.dt, t, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"time {t} is not on the grid")
        if not 0 <= i < len(self.times):
            raise ValueError(f"time {t} outside the horizon")
        return i

    def e_xi_at(self, t: float, xi) -> np.ndarray:
        """Per-path e_xi(X_t - x0): complex phase on finite states, zero
        on cemetery states."""
        j = self.time_index(t)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        vals = self.values[:, j, :] - self.spec.x0
        out = np.exp(1j * (vals @ xi))
        out[self.status[:, j] != STATUS_FINITE] = 0.0
        out[self.invalid] = np.nan
        return out

    def export(self, outdir) -> None:
        out = FsPath(outdir)
        (out / "paths").mkdir(parents=True, exist_ok=True)
        manifest = {
            "schema": "symbolkit-ensemble/1",
            "model": self.model_name,
            "spec": self.spec.to_json(),
            "seed_ledger": self.seed_ledger,
            "invalid_count": self.invalid_count,
            "bias_notes": self.bias_notes,
        }
        with open(out / "manifest.json", "w") as fh:
            fh.write(dump_json(manifest))
        width = max(5, len(str(self.n_paths - 1)))
        for i in range(self.n_paths):
            self.path(i).to_csv(out / "paths" / f"path_{i:0{width}d}.csv")


# ---------------------------------------------------------------------------
# dynamics compiled from a model

def _stable_standard(alpha: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Symmetric stable variate with characteristic function
    exp(-|xi|^alpha), by the polar (Chambers-Mallows-Stuck) method."""
    alpha = np.asarray(alpha, dtype=float)
    w = np.maximum(w, 1e-300)
    tan_branch = np.tan(u)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        s = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
             * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))
    return np.where(np.abs(alpha - 1.0) < 1e-12, tan_branch, s)


class _Dynamics:
    """Precompiled per-step increment and killing machinery."""

    def __init__(self, model: StateModel, dt: float, small_jump_cut: float | None,
                 killing_mode: str):
        self.model = model
        self.dt = dt
        self.dim = model.dim
        self.killing_mode = killing_mode
        self.sde = model.sde
        self.bias_notes: dict = {}
        if self.sde is not None:
            driver_model = StateModel.from_triplet(self.sde.driver)
            self.driver = _Dynamics(driver_model, dt, small_jump_cut, "clock")
            self.f_coeff = self.sde.coefficient
            self.const_kill = self.sde.driver.killing_rate
            self.bias_notes = self.driver.bias_notes
            return
        self.driver = None

        self.kill_const = model.kill.value if model.kill.is_constant else None
        if killing_mode == "clock" and self.kill_const is None:
            raise ValueError("exact killing clock requires a constant killing rate")

        # drift and covariance
        self.ell_const = model.drift.constant_value() if model.drift.is_constant else None
        if model.covariance.is_constant:
            q = model.covariance.constant_value()
            tri = LevyTriplet(0.0, np.zeros(self.dim), q, ZeroMeasure(), model.cutoff)
            self.chol_const = tri.cholesky()
            self.has_gauss = bool(np.any(self.chol_const != 0.0))
        else:
            self.chol_const = None
            self.has_gauss = True

        # jump machinery
        fam = model.measures
        self.atoms = None
        self.stable = None
        self.density = None
        self.comp_drift_const = np.zeros(self.dim)
        if isinstance(fam, ConstantMeasureFamily):
            m = fam.measure
            if isinstance(m, DiscreteMeasure):
                self.atoms = (m.jumps, m.rates, None)
                chi = model.cutoff(m.jumps)
                self.comp_drift_const = self.comp_drift_const - (m.rates * chi) @ m.jumps
            elif isinstance(m, StableMeasure):
                self.stable = (None, None, m.alpha, m.scale)
            elif isinstance(m, DensityMeasure):
                self._setup_density(m, small_jump_cut)
        elif isinstance(fam, DiscreteMeasureFamily):
            self.atoms = (fam.jumps, None, fam)
        elif isinstance(fam, StableMeasureFamily):
            self.stable = (fam.alpha_coeff, fam.scale_coeff, None, None)

    def _setup_density(self, m: DensityMeasure, small_jump_cut: float | None):
        r_chi = self.model.cutoff.support_radius
        if small_jump_cut is None:
            budget_ref = float(np.trace(
                self.model.covariance.constant_value()
                if self.model.covariance.is_constant else np.eye(self.dim)
            )) + m.second_moment_band(0.0, 1.0)
            budget = 1e-4 * budget_ref
            cut = m.eps
            for cand in np.geomspace(m.eps, max(r_chi, m.eps * 1.0001), 41):
                if m.second_moment_band(m.eps, cand) <= budget:
                    cut = float(cand)
                else:
                    break
        else:
            cut = float(small_jump_cut)
        cut = min(max(cut, m.eps), r_chi)
        sub_var = m.second_moment_band(m.eps, cut)
        self.density = (m, cut, m.rate_above(cut), math.sqrt(max(sub_var, 0.0)))
        self.comp_drift_const = self.comp_drift_const - np.array(
            [m.mean_band(cut, r_chi)])
        self.bias_notes = {
            "small_jump_cut": cut,
            "substituted_variance": sub_var,
            "discarded_second_moment_bound": m.small_mass_second_moment,
        }

    # -- per-step pieces ----------------------------------------------------

    def clock_times(self, n: int, rng: np.random.Generator) -> np.ndarray:
        a = self.const_kill if self.driver is not None else self.kill_const
        u = rng.random(n)
        if a is None or a <= 0.0:
            return np.full(n, np.inf)
        with np.errstate(divide="ignore"):
            return -np.log(u) / a

    def increments(self, xs: np.ndarray, rngs: dict) -> np.ndarray:
        """One-step increments for every path (dead paths included; the
        caller masks).  Returns (n, d); NaN rows flag evaluation failure."""
        n = xs.shape[0]
        dt = self.dt
        if self.driver is not None:
            dz = self.driver.increments(np.zeros((n, 1)), rngs)
            f = self.f_coeff.lenient(xs)
            return f[:, None] * dz

        inc = np.zeros((n, self.dim))
        # drift with jump compensation
        if self.ell_const is not None:
            inc += (self.ell_const + self.comp_drift_const) * dt
        else:
            ell = self.model.drift.lenient(xs)
            inc += (ell + self.comp_drift_const) * dt
        # Gaussian part
        if self.has_gauss:
            z = rngs["gauss"].standard_normal((n, self.dim))
            if self.chol_const is not None:
                inc += math.sqrt(dt) * z @ self.chol_const.T
            else:
                q = np.nan_to_num(self.model.covariance.lenient(xs), nan=np.nan,
                                  posinf=np.nan, neginf=np.nan)
                bad_q = ~np.all(np.isfinite(q), axis=(1, 2))
                q[bad_q] = np.eye(self.dim)
                chol = _batched_cholesky(q)
                gauss = math.sqrt(dt) * np.einsum("nij,nj->ni", chol, z)
                gauss[bad_q] = np.nan
                inc += gauss
        # discrete atoms
        if self.atoms is not None:
            jumps, rates, fam = self.atoms
            if fam is None:
                counts = rngs["jump"].poisson(rates * dt, size=(n, rates.shape[0]))
                inc += counts @ jumps
            else:
                r = fam.rates_many_lenient(xs)
                ok_r = np.isfinite(r) & (r >= 0)
                r_safe = np.where(ok_r, r, 0.0)
                counts = rngs["jump"].poisson(r_safe * dt)
                chi = self.model.cutoff(jumps)
                inc += counts @ jumps - ((r_safe * chi) @ jumps) * dt
                inc[~np.all(ok_r, axis=1)] = np.nan
        # stable component
        if self.stable is not None:
            alpha_c, scale_c, alpha0, scale0 = self.stable
            u = (rngs["stable"].random(n) - 0.5) * math.pi
            w = -np.log(np.maximum(rngs["stable"].random(n), 1e-300))
            if alpha0 is not None:
                amp = (scale0 * dt) ** (1.0 / alpha0)
                inc[:, 0] += amp * _stable_standard(np.full(n, alpha0), u, w)
            else:
                alpha = np.clip(alpha_c.lenient(xs), 1e-6, 2.0)
                scale = np.maximum(scale_c.lenient(xs), 0.0)
                amp = (scale * dt) ** (1.0 / alpha)
                inc[:, 0] += amp * _stable_standard(alpha, u, w)
        # density measure: compound Poisson above the cut, Gaussian below
        if self.density is not None:
            m, cut, cp_rate, sub_std = self.density
            counts = rngs["jump"].poisson(cp_rate * dt, size=n)
            total = int(counts.sum())
            if total:
                sizes = m.sample_sizes(total, rngs["jump"], cut=cut)
                idx = np.repeat(np.arange(n), counts)
                np.add.at(inc[:, 0], idx, sizes)
            if sub_std > 0.0:
                inc[:, 0] += sub_std * math.sqrt(dt) * rngs["small"].standard_normal(n)
        return inc

    def hazard_prob(self, xs: np.ndarray, prop: np.ndarray) -> np.ndarray:
        """Per-step killing probability 1 - exp(-abar dt), abar the
        average of the rate at the step endpoints (exact for constant
        rates, second order otherwise)."""
        if self.kill_const is not None:
            a = self.kill_const
            return np.full(xs.shape[0], -math.expm1(-a * self.dt))
        a0 = self.model.kill.lenient(xs)
        a1 = self.model.kill.lenient(prop)
        abar = 0.5 * (a0 + np.where(np.isfinite(a1), a1, a0))
        return -np.expm1(-np.maximum(abar, 0.0) * self.dt)


def _batched_cholesky(q: np.ndarray) -> np.ndarray:
    if q.shape[-1] == 1:
        return np.sqrt(np.maximum(q, 0.0))
    try:
        return np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * np.eye(q.shape[-1])
        return np.linalg.cholesky(q + jitter)


# ---------------------------------------------------------------------------
# recorders

class _FullRecorder:
    def __init__(self, n, n_steps, dim):
        self.values = np.full((n, n_steps + 1, dim), np.nan)
        self.status = np.zeros((n, n_steps + 1), dtype=np.int8)

    def record(self, j, x, status):
        finite = status == STATUS_FINITE
        self.values[finite, j, :] = x[finite]
        self.status[:, j] = status


class _SnapshotRecorder:
    def __init__(self, n, snap_idx, dim):
        self.snap_idx = {int(i): k for k, i in enumerate(snap_idx)}
        self.values = np.full((len(snap_idx), n, dim), np.nan)
        self.status = np.zeros((len(snap_idx), n), dtype=np.int8)
        self.first_step_frozen = 0

    def record(self, j, x, status):
        k = self.snap_idx.get(j)
        if k is None:
            return
        finite = status == STATUS_FINITE
        self.values[k, finite, :] = x[finite]
        self.status[k] = status


class _MaxRecorder:
    def __init__(self, n, snap_idx, dim, x_ref):
        self.snap_idx = {int(i): k for k, i in enumerate(snap_idx)}
        self.x_ref = x_ref
        self.running = np.zeros(n)
        self.out = np.zeros((len(snap_idx), n))

    def record(self, j, x, status):
        norm = np.linalg.norm(x - self.x_ref, axis=1)
        norm[status != STATUS_FINITE] = np.inf
        np.maximum(self.running, norm, out=self.running)
        k = self.snap_idx.get(j)
        if k is not None:
            self.out[k] = self.running


# ---------------------------------------------------------------------------
# kernel

def _chunk_streams(seed: int, chunk_id: int) -> dict:
    return {
        name: np.random.default_rng(np.random.SeedSequence([seed, code, chunk_id]))
        for name, code in _PURPOSES.items()
    }


def _run_chunk(dyn: _Dynamics, x0: np.ndarray, n: int, n_steps: int, dt: float,
               seed: int, chunk_id: int, expl: float, recorder,
               stop_center=None, stop_radius=None):
    rngs = _chunk_streams(seed, chunk_id)
    dim = dyn.dim
    x = np.tile(x0, (n, 1))
    status = np.zeros(n, dtype=np.int8)
    frozen = np.zeros(n, dtype=bool)
    invalid = np.zeros(n, dtype=bool)
    use_clock = dyn.killing_mode == "clock"
    t_kill = dyn.clock_times(n, rngs["clock"]) if use_clock else None

    recorder.record(0, x, status)
    if stop_radius is not None and math.isfinite(stop_radius):
        outside0 = np.linalg.norm(x - stop_center, axis=1) > stop_radius
        if np.any(outside0):
            raise ValueError("start point must be interior to the stopping ball")

    first_step_frozen = 0
    for i in range(n_steps):
        t_next = (i + 1) * dt
        alive = (status == STATUS_FINITE) & ~frozen & ~invalid
        inc = dyn.increments(x, rngs)
        prop_all = x + inc
        if not use_clock:
            q = dyn.hazard_prob(x, prop_all)
            u_haz = rngs["hazard"].random(n)
        # paths whose coefficients failed to evaluate freeze in place
        bad = alive & ~np.all(np.isfinite(inc), axis=1)
        if not use_clock:
            bad |= alive & ~np.isfinite(q)
        invalid |= bad
        move = alive & ~bad
        prop = np.where(move[:, None], prop_all, x)
        explode = move & (np.linalg.norm(prop, axis=1) >= expl)
        if use_clock:
            ring = move & ~explode & (t_kill <= t_next + 1e-15)
        else:
            ring = move & ~explode & (u_haz < q)
        ok = move & ~explode & ~ring
        x[ok] = prop[ok]
        status[explode] = STATUS_INFINITY
        status[ring] = STATUS_DELTA
        if stop_radius is not None and math.isfinite(stop_radius):
            just_out = ok & (np.linalg.norm(x - stop_center, axis=1) > stop_radius)
            frozen |= just_out
            if i == 0:
                first_step_frozen = int(just_out.sum())
        recorder.record(i + 1, x, status)
    if isinstance(recorder, _SnapshotRecorder):
        recorder.first_step_frozen = first_step_frozen
    return recorder, invalid


def _run_ensemble(model: StateModel, x0: np.ndarray, n_paths: int, n_steps: int,
                  dt: float, seed: int, expl: float, killing_mode: str,
                  small_jump_cut, recorder_factory, stop=None):
    dyn = _Dynamics(model, dt, small_jump_cut, killing_mode)
    chunks = []
    start = 0
    cid = 0
    while start < n_paths:
        size = min(CHUNK_SIZE, n_paths - start)
        chunks.append((cid, start, size))
        start += size
        cid += 1

    stop_center = stop[0] if stop else None
    stop_radius = stop[1] if stop else None

    def work(args):
        cid, start, size = args
        if recorder_factory is _FullRecorder:
            rec = _FullRecorder(size, n_steps, model.dim)
        else:
            rec = recorder_factory(size)
        return _run_chunk(dyn, x0, size, n_steps, dt, seed, cid, expl, rec,
                          stop_center, stop_radius)

    workers = _worker_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    ledger = [{
        "chunk": cid,
        "paths": [start, start + size],
        "streams": {name: [seed, code, cid] for name, code in _PURPOSES.items()},
    } for cid, start, size in chunks]
    return results, ledger, dyn


def _validate_model_spec(model: StateModel, spec: SimSpec):
    if spec.x0.shape[0] != model.dim:
        raise ValueError("x0 dimension mismatch")


def sample_levy(triplet: LevyTriplet, spec: SimSpec) -> Ensemble:
    """Simulate a constant-triplet ensemble with an exact exponential
    killing clock when the killing rate is positive."""
    model = StateModel.from_triplet(triplet)
    return _sample(model, spec, killing_mode="clock", name="levy")


def sample_autonomous(model: StateModel, spec: SimSpec) -> Ensemble:
    """Euler scheme for a state-dependent model with hazard killing and
    explosion absorption."""
    return _sample(model, spec, killing_mode="hazard", name=model.name)


def sample_sde(f, driver: LevyTriplet, spec: SimSpec) -> Ensemble:
    """Euler scheme for dX = f(X-) dZ with a constant driving triplet."""
    model = make_sde_model(f, driver)
    return _sample(model, spec, killing_mode="clock", name="sde")


def make_sde_model(f, driver: LevyTriplet) -> StateModel:
    from .triplet import SdeBlock
    if driver.dim != 1:
        raise ValueError("sde mode is one-dimensional")
    if isinstance(f, Coefficient):
        coeff = f
    elif isinstance(f, (Expression, int, float)):
        coeff = Coefficient(f, 1)
    else:
        raise TypeError("f must be an Expression, number or Coefficient")
    base = StateModel.from_triplet(driver)
    return StateModel(
        dim=1, kill=base.kill, drift=base.drift, covariance=base.covariance,
        measures=base.measures, cutoff=driver.cutoff, domain_box=base.domain_box,
        sde=SdeBlock(coeff, driver), name="sde",
    )


def _sample(model: StateModel, spec: SimSpec, killing_mode: str, name: str) -> Ensemble:
    _validate_model_spec(model, spec)
    n_steps = spec.n_steps
    results, ledger, dyn = _run_ensemble(
        model, spec.x0, spec.n_paths, n_steps, spec.dt, spec.rng_seed,
        spec.explosion_threshold, killing_mode, spec.small_jump_cut,
        _FullRecorder,
    )
    values = np.concatenate([r.values for r, _ in results], axis=0)
    status = np.concatenate([r.status for r, _ in results], axis=0)
    invalid = np.concatenate([inv for _, inv in results], axis=0)
    times = np.arange(n_steps + 1) * spec.dt
    return Ensemble(times, values, status, spec, ledger, invalid,
                    model_name=name, bias_notes=dyn.bias_notes)


def snap_times(times, dt: float) -> tuple[list[int], np.ndarray]:
    """Round times to grid indices (at least one step, strictly
    increasing required after rounding); returns (indices, actual)."""
    idx = [max(1, int(round(t / dt))) for t in times]
    if len(set(idx)) != len(idx):
        raise ValueError("snapshot times collapse on the dt grid; reduce dt")
    return idx, np.asarray(idx, dtype=float) * dt


def snapshot_run(model: StateModel, x0, snap_times_req, n: int, dt: float, seed: int,
                 killing_mode: str = "auto", stop_center=None, stop_radius=None,
                 explosion_threshold: float = 1e9, small_jump_cut=None):
    """Evolve ``n`` paths and capture state and status at the requested
    times only (optionally freezing paths at the first grid exit from a
    closed ball).  Times snap to the dt grid.  Returns
    (actual_times, values (T, n, d), status (T, n), first_step_frozen)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if killing_mode == "auto":
        killing_mode = "clock" if (model.kill.is_constant or model.sde is not None) else "hazard"
    snap_idx, actual = snap_times(snap_times_req, dt)
    n_steps = max(snap_idx)
    stop = None
    if stop_radius is not None:
        stop = (np.atleast_1d(np.asarray(stop_center, dtype=float)), float(stop_radius))
    results, _, _ = _run_ensemble(
        model, x0, n, n_steps, dt, seed, explosion_threshold, killing_mode,
        small_jump_cut, lambda size: _SnapshotRecorder(size, snap_idx, model.dim),
        stop=stop,
    )
    values = np.concatenate([r.values for r, _ in results], axis=1)
    status = np.concatenate([r.status for r, _ in results], axis=1)
    frozen_first = sum(r.first_step_frozen for r, _ in results)
    return actual, values, status, frozen_first


def running_max_run(model: StateModel, x0, snap_times_req, n: int, dt: float, seed: int,
                    killing_mode: str = "auto", explosion_threshold: float = 1e9,
                    small_jump_cut=None):
    """Running maximum of |X_s - x0| captured at the requested times
    (snapped to the dt grid); returns (actual_times, (n, T) array).
    Cemetery states count as +inf."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if killing_mode == "auto":
        killing_mode = "clock" if (model.kill.is_constant or model.sde is not None) else "hazard"
    snap_idx, actual = snap_times(snap_times_req, dt)
    n_steps = max(snap_idx)
    results, _, _ = _run_ensemble(
        model, x0, n, n_steps, dt, seed, explosion_threshold, killing_mode,
        small_jump_cut, lambda size: _MaxRecorder(size, snap_idx, model.dim, x0),
    )
    return actual, np.concatenate([r.out for r, _ in results], axis=1).T


@dataclass(frozen=True)
class PathSampler:
    """Bundles a model with discretisation and seeding choices; the
    probe and diagnostic modules draw their ensembles through this."""

    model: StateModel
    dt: float
    seed: int = 0
    explosion_threshold: float = 1e9
    small_jump_cut: float | None = None

    def snapshots(self, x0, times, n, dt=None, stop_center=None, stop_radius=None):
        return snapshot_run(self.model, x0, times, n, dt or self.dt, self.seed,
                            stop_center=stop_center, stop_radius=stop_radius,
                            explosion_threshold=self.explosion_threshold,
                            small_jump_cut=self.small_jump_cut)

    def running_max(self, x0, times, n, dt=None):
        return running_max_run(self.model, x0, times, n, dt or self.dt, self.seed,
                               explosion_threshold=self.explosion_threshold,
                               small_jump_cut=self.small_jump_cut)

    def ensemble(self, x0, horizon, n, dt=None, killing_mode=None) -> Ensemble:
        spec = SimSpec(x0=np.atleast_1d(x0), horizon=horizon, dt=dt or self.dt,
                       n_paths=n, rng_seed=self.seed,
                       explosion_threshold=self.explosion_threshold,
                       small_jump_cut=self.small_jump_cut)
        mode = killing_mode or ("clock" if (self.model.kill.is_constant
                                            or self.model.sde is not None) else "hazard")
        return _sample(self.model, spec, killing_mode=mode, name=self.model.name)
