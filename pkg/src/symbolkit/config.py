"""Model configuration files (JSON, schema ``symbolkit-model/1``).

Coefficients are written as expression strings in the variables
x1..xd (plain numbers are accepted and treated as constants).  Unknown
fields are errors: scientific runs should fail closed rather than run
with silently ignored settings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath

import numpy as np

from .expr import Expression, ExpressionDomainError, ExpressionSyntaxError, parse_expression
from .triplet import (
    Coefficient,
    ConstantMeasureFamily,
    CutoffFunction,
    DensityMeasure,
    DiscreteMeasure,
    DiscreteMeasureFamily,
    LevyTriplet,
    MatrixCoefficient,
    StableMeasure,
    StableMeasureFamily,
    StateModel,
    VectorCoefficient,
    ZeroMeasure,
)

__all__ = [
    "SCHEMA",
    "ModelConfig",
    "ModelConfigError",
    "ModelInvariantError",
    "load_model",
    "bundled_model_path",
]

SCHEMA = "symbolkit-model/1"


class ModelConfigError(ValueError):
    """Schema violation; carries the offending field and the reason."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


class ModelInvariantError(ValueError):
    """The configuration parsed but fails a model invariant at some
    probe point of the domain box."""


@dataclass
class ModelConfig:
    """Parsed configuration prior to model compilation."""

    dim: int
    mode: str
    killing_rate: object
    drift: list
    covariance: list
    levy_measure: dict
    cutoff: CutoffFunction
    domain_box: np.ndarray
    sde: dict | None = None
    simulation: dict = field(default_factory=dict)
    name: str = "model"


_ALLOWED_TOP = {
    "schema", "name", "dim", "mode", "killing_rate", "drift", "covariance",
    "levy_measure", "cutoff", "domain_box", "sde", "simulation",
}
_ALLOWED_MEASURE = {
    "zero": {"kind"},
    "discrete": {"kind", "atoms"},
    "alpha_stable": {"kind", "alpha", "scale"},
    "density": {"kind", "density", "eps", "y_max"},
}
_ALLOWED_SIM = {"dt", "horizon", "n_paths", "x0", "explosion_threshold",
                "small_jump_cut", "seed"}

CONTINUITY_GRID = 33
OSCILLATION_LIMIT = 1e6


def _coeff_spec(raw, dim: int, field_name: str):
    if isinstance(raw, bool):
        raise ModelConfigError(field_name, "expected a number or expression string")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            e = parse_expression(raw, dim=dim)
        except ExpressionSyntaxError as err:
            raise ModelConfigError(field_name, f"bad expression: {err}") from err
        if e.max_var() == 0:
            # constant-fold variable-free expressions so models written
            # with quoted numbers still count as constant coefficient
            try:
                return float(e.evaluate(np.zeros(dim)))
            except ExpressionDomainError:
                pass
        return e
    raise ModelConfigError(field_name, "expected a number or expression string")


def _check_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ModelConfigError(where, f"unknown fields {sorted(unknown)}")


def parse_config(raw: dict, name: str = "model") -> ModelConfig:
    if not isinstance(raw, dict):
        raise ModelConfigError("<root>", "model file must hold a JSON object")
    _check_keys(raw, _ALLOWED_TOP, "<root>")
    if raw.get("schema") != SCHEMA:
        raise ModelConfigError("schema", f"expected {SCHEMA!r}, got {raw.get('schema')!r}")
    dim = raw.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise ModelConfigError("dim", "must be a positive integer")
    mode = raw.get("mode", "autonomous")
    if mode not in ("levy", "autonomous", "sde"):
        raise ModelConfigError("mode", "must be one of levy, autonomous, sde")

    drift_raw = raw.get("drift", [0.0] * dim)
    if not isinstance(drift_raw, list) or len(drift_raw) != dim:
        raise ModelConfigError("drift", f"expected a list of {dim} entries")
    cov_raw = raw.get("covariance", [[0.0] * dim for _ in range(dim)])
    if (not isinstance(cov_raw, list) or len(cov_raw) != dim
            or any(not isinstance(r, list) or len(r) != dim for r in cov_raw)):
        raise ModelConfigError("covariance", f"expected a {dim}x{dim} matrix")

    cut_raw = raw.get("cutoff", {"kind": "indicator_ball", "radius": 1.0})
    _check_keys(cut_raw, {"kind", "radius", "radii"}, "cutoff")
    try:
        if cut_raw.get("kind") == "product_indicator":
            cutoff = CutoffFunction(kind="product_indicator",
                                    radii=tuple(cut_raw["radii"]))
        else:
            cutoff = CutoffFunction(kind=cut_raw.get("kind", "indicator_ball"),
                                    radius=float(cut_raw.get("radius", 1.0)))
    except (KeyError, ValueError) as err:
        raise ModelConfigError("cutoff", str(err)) from err

    box_raw = raw.get("domain_box", [[-10.0, 10.0]] * dim)
    box = np.asarray(box_raw, dtype=float)
    if box.shape != (dim, 2) or np.any(box[:, 0] >= box[:, 1]):
        raise ModelConfigError("domain_box", "expected d rows [lo, hi] with lo < hi")

    measure_raw = raw.get("levy_measure", {"kind": "zero"})
    kind = measure_raw.get("kind")
    if kind not in _ALLOWED_MEASURE:
        raise ModelConfigError("levy_measure.kind", f"unknown kind {kind!r}")
    _check_keys(measure_raw, _ALLOWED_MEASURE[kind], "levy_measure")

    sde_raw = raw.get("sde")
    if mode == "sde":
        if not isinstance(sde_raw, dict):
            raise ModelConfigError("sde", "sde mode requires an sde block")
        _check_keys(sde_raw, {"coefficient", "driver"}, "sde")
        if dim != 1:
            raise ModelConfigError("dim", "sde mode is one-dimensional")
    elif sde_raw is not None:
        raise ModelConfigError("sde", "sde block only valid in sde mode")

    sim_raw = raw.get("simulation", {})
    _check_keys(sim_raw, _ALLOWED_SIM, "simulation")

    return ModelConfig(
        dim=dim, mode=mode,
        killing_rate=raw.get("killing_rate", 0.0),
        drift=drift_raw, covariance=cov_raw, levy_measure=measure_raw,
        cutoff=cutoff, domain_box=box, sde=sde_raw, simulation=sim_raw,
        name=raw.get("name", name),
    )


def _build_measure_family(measure_raw: dict, dim: int):
    kind = measure_raw["kind"]
    if kind == "zero":
        return ConstantMeasureFamily(ZeroMeasure())
    if kind == "discrete":
        atoms = measure_raw.get("atoms", [])
        if not atoms:
            raise ModelConfigError("levy_measure.atoms", "at least one atom required")
        jumps, rate_specs = [], []
        for i, atom in enumerate(atoms):
            _check_keys(atom, {"jump", "rate"}, f"levy_measure.atoms[{i}]")
            jumps.append(np.atleast_1d(np.asarray(atom["jump"], dtype=float)))
            rate_specs.append(_coeff_spec(atom["rate"], dim, f"levy_measure.atoms[{i}].rate"))
        if all(isinstance(r, float) for r in rate_specs):
            return ConstantMeasureFamily(DiscreteMeasure(np.stack(jumps), np.array(rate_specs)))
        return DiscreteMeasureFamily(np.stack(jumps), rate_specs, dim)
    if kind == "alpha_stable":
        alpha = _coeff_spec(measure_raw.get("alpha", 1.0), dim, "levy_measure.alpha")
        scale = _coeff_spec(measure_raw.get("scale", 1.0), dim, "levy_measure.scale")
        if isinstance(alpha, float) and isinstance(scale, float):
            return ConstantMeasureFamily(StableMeasure(alpha, scale))
        return StableMeasureFamily(alpha, scale, dim)
    if kind == "density":
        expr = _coeff_spec(measure_raw["density"], 1, "levy_measure.density")
        if isinstance(expr, float):
            raise ModelConfigError("levy_measure.density", "expected an expression in x1")
        try:
            m = DensityMeasure(expr, float(measure_raw["eps"]), float(measure_raw["y_max"]))
        except (ValueError, KeyError) as err:
            raise ModelConfigError("levy_measure", str(err)) from err
        return ConstantMeasureFamily(m)
    raise AssertionError(kind)


def compile_model(cfg: ModelConfig) -> StateModel:
    dim = cfg.dim
    kill = Coefficient(_coeff_spec(cfg.killing_rate, dim, "killing_rate"), dim)
    drift = VectorCoefficient(
        [_coeff_spec(v, dim, f"drift[{i}]") for i, v in enumerate(cfg.drift)], dim)
    cov = MatrixCoefficient(
        [[_coeff_spec(v, dim, f"covariance[{i}][{j}]") for j, v in enumerate(row)]
         for i, row in enumerate(cfg.covariance)], dim)
    measures = _build_measure_family(cfg.levy_measure, dim)

    sde_block = None
    if cfg.mode == "sde":
        driver_raw = cfg.sde.get("driver")
        if not isinstance(driver_raw, dict):
            raise ModelConfigError("sde.driver", "expected a driver triplet object")
        _check_keys(driver_raw, {"killing_rate", "drift", "covariance",
                                 "levy_measure", "cutoff"}, "sde.driver")
        driver_cfg = parse_config({"schema": SCHEMA, "dim": 1, "mode": "levy",
                                   **driver_raw}, name="driver")
        try:
            driver = compile_model(driver_cfg).constant_triplet()
        except ValueError as err:
            raise ModelConfigError("sde.driver", f"driver must be constant: {err}") from err
        from .triplet import SdeBlock
        f_spec = _coeff_spec(cfg.sde["coefficient"], 1, "sde.coefficient")
        sde_block = SdeBlock(Coefficient(f_spec, 1), driver)

    model = StateModel(dim=dim, kill=kill, drift=drift, covariance=cov,
                       measures=measures, cutoff=cfg.cutoff,
                       domain_box=cfg.domain_box, sde=sde_block, name=cfg.name)
    _validate_on_box(model)
    return model


def _probe_grid(box: np.ndarray, per_dim: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _validate_on_box(model: StateModel) -> None:
    """Spot-check the coefficients on a grid over the domain box: finite
    values, no wild oscillation, killing rate non-negative, covariance
    positive semidefinite, stable orders inside (0, 2]."""
    per_dim = CONTINUITY_GRID if model.dim == 1 else 9
    pts = _probe_grid(model.domain_box, per_dim)
    if model.sde is not None:
        f = model.sde.coefficient.lenient(pts)
        if np.any(~np.isfinite(f)):
            k = int(np.argmax(~np.isfinite(f)))
            raise ModelInvariantError(f"sde coefficient not finite at x={pts[k].tolist()}")
        return

    try:
        a = model.kill(pts)
    except ExpressionDomainError as err:
        raise ModelInvariantError(f"killing_rate evaluation failed: {err}") from err
    _finite_and_tame(a, pts, "killing_rate")
    if np.any(a < 0):
        k = int(np.argmax(a < 0))
        raise ModelInvariantError(f"killing_rate negative at x={pts[k].tolist()}")

    ell = model.drift(pts)
    _finite_and_tame(ell, pts, "drift")
    q = model.covariance(pts)
    _finite_and_tame(q, pts, "covariance")
    eigs = np.linalg.eigvalsh(0.5 * (q + np.swapaxes(q, -1, -2)))
    if np.any(eigs.min(axis=-1) < -1e-12):
        k = int(np.argmax(eigs.min(axis=-1) < -1e-12))
        raise ModelInvariantError(
            f"covariance not positive semidefinite at x={pts[k].tolist()}")

    fam = model.measures
    if isinstance(fam, StableMeasureFamily):
        alpha = fam.alpha_coeff(pts)
        if np.any((alpha <= 0) | (alpha > 2)):
            k = int(np.argmax((alpha <= 0) | (alpha > 2)))
            raise ModelInvariantError(f"stable order outside (0,2] at x={pts[k].tolist()}")
        scale = fam.scale_coeff(pts)
        if np.any(scale < 0):
            k = int(np.argmax(scale < 0))
            raise ModelInvariantError(f"stable scale negative at x={pts[k].tolist()}")
    elif isinstance(fam, DiscreteMeasureFamily):
        rates = fam.rates_many(pts)
        if np.any(rates < 0):
            k = int(np.argmax(np.any(rates < 0, axis=1)))
            raise ModelInvariantError(f"atom rate negative at x={pts[k].tolist()}")


def _finite_and_tame(values: np.ndarray, pts: np.ndarray, what: str) -> None:
    flat = np.asarray(values, dtype=float).reshape(pts.shape[0], -1)
    bad = ~np.isfinite(flat)
    if np.any(bad):
        k = int(np.argmax(np.any(bad, axis=1)))
        raise ModelInvariantError(f"{what} not finite at x={pts[k].tolist()}")
    if flat.shape[0] > 1:
        osc = np.abs(np.diff(flat, axis=0)).max()
        if osc > OSCILLATION_LIMIT:
            raise ModelInvariantError(
                f"{what} oscillates beyond {OSCILLATION_LIMIT:g} between probe points")


def load_model(path) -> StateModel:
    """Read, validate and compile a model file."""
    p = FsPath(path)
    try:
        raw = json.loads(p.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as err:
        raise ModelConfigError("<file>", f"invalid JSON: {err}") from err
    cfg = parse_config(raw, name=p.stem)
    return compile_model(cfg)


def load_config(path) -> ModelConfig:
    p = FsPath(path)
    raw = json.loads(p.read_text())
    return parse_config(raw, name=p.stem)


def bundled_model_path(name: str) -> FsPath:
    """Path of a model file shipped with the package (e.g. "bm")."""
    fname = name if name.endswith(".model") else f"{name}.model"
    ref = resources.files("symbolkit") / "models" / fname
    with resources.as_file(ref) as p:
        return FsPath(p)


def resolve_model_path(spec: str) -> FsPath:
    """Interpret a --model argument: an existing file path, or the name
    of a bundled model."""
    p = FsPath(spec)
    if p.exists():
        return p
    try:
        q = bundled_model_path(spec)
    except (FileNotFoundError, ModuleNotFoundError):
        raise FileNotFoundError(f"model file {spec!r} not found")
    if q.exists():
        return q
    raise FileNotFoundError(f"model file {spec!r} not found")
