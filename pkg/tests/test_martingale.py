import math

import numpy as np
import pytest

from symbolkit.expr import parse_expression
from symbolkit.extended import Path, STATUS_DELTA
from symbolkit.martingale import (
    canonical_representation_residual,
    exponential_martingale_check,
    killing_compensator_check,
    l_process,
    truncate_jumps,
)
from symbolkit.simulate import SimSpec, sample_autonomous, sample_levy
from symbolkit.triplet import (
    Coefficient,
    ConstantMeasureFamily,
    CutoffFunction,
    DiscreteMeasure,
    LevyTriplet,
    MatrixCoefficient,
    StableMeasure,
    StateModel,
    VectorCoefficient,
    ZeroMeasure,
)

N = 20_000


def _spec(n=N, dt=0.005, horizon=1.0, seed=71, x0=(0.0,)):
    return SimSpec(x0=list(x0), horizon=horizon, dt=dt, n_paths=n, rng_seed=seed)


def _model(kill, drift, cov, measures=None, box=((-10.0, 10.0),)):
    d = len(drift)
    return StateModel(
        dim=d, kill=Coefficient(kill, d),
        drift=VectorCoefficient(drift, d),
        covariance=MatrixCoefficient(cov, d),
        measures=measures or ConstantMeasureFamily(ZeroMeasure()),
        cutoff=CutoffFunction(),
        domain_box=np.asarray(box),
    )


class TestTruncateJumps:
    def test_two_jump_fixture(self):
        times = np.arange(0.0, 1.05, 0.1)
        vals = np.zeros((len(times), 1))
        vals[times >= 0.3] += 2.0
        vals[times >= 0.7] += 0.1
        p = Path(times, vals, np.zeros(len(times), dtype=np.int8))
        dec = truncate_jumps(p, 1.0)
        assert dec.big_jump_part[-1, 0] == pytest.approx(2.0)
        assert dec.truncated[-1, 0] == pytest.approx(0.1)
        assert np.allclose(dec.truncated + dec.big_jump_part, vals, atol=1e-12, rtol=0)

    def test_continuous_path_no_big_jumps(self):
        times = np.linspace(0.0, 1.0, 101)
        vals = np.sin(times)[:, None]
        p = Path(times, vals, np.zeros(101, dtype=np.int8))
        dec = truncate_jumps(p, 0.5)
        assert np.all(dec.big_jump_part == 0.0)
        assert np.allclose(dec.truncated, vals, atol=1e-12)

    def test_compound_poisson_big_jump_mean(self):
        tri = LevyTriplet(0.0, [0.0], [[0.0]], DiscreteMeasure([[3.0]], [1.0]),
                          CutoffFunction(radius=1.0))
        ens = sample_levy(tri, _spec(n=5000, dt=0.01, seed=72))
        totals = [truncate_jumps(ens.path(i), 1.0).big_jump_part[-1, 0]
                  for i in range(ens.n_paths)]
        totals = np.asarray(totals)
        se = totals.std(ddof=1) / math.sqrt(len(totals))
        assert abs(totals.mean() - 3.0) <= 3.0 * se

    def test_exact_split_on_killed_path(self):
        times = np.arange(0.0, 0.5, 0.1)
        vals = np.array([[0.0], [2.0], [2.1], [np.nan], [np.nan]])
        status = np.array([0, 0, 0, 2, 2], dtype=np.int8)
        p = Path(times, vals, status)
        dec = truncate_jumps(p, 1.0)
        assert dec.times.shape[0] == 3
        assert dec.big_jump_part[-1, 0] == pytest.approx(2.0)


class TestKillingCompensator:
    @pytest.mark.parametrize("a", [0.0, 0.1, 0.5, 2.0])
    def test_constant_rates(self, a):
        model = _model(a, [0.0], [[0.0]])
        ens = sample_autonomous(model, _spec(n=10_000, dt=0.002, seed=73))
        rep = killing_compensator_check(ens, model, (0.25, 0.5, 1.0))
        assert rep.passed, rep.rows

    def test_state_dependent_rate(self):
        model = _model(parse_expression("x1^2"), [1.0], [[0.0]], box=((-3.0, 3.0),))
        ens = sample_autonomous(model, _spec(dt=0.005, seed=74))
        rep = killing_compensator_check(ens, model, (0.25, 0.5, 1.0))
        assert rep.passed
        # closed-form survival along the deterministic ramp
        j = ens.time_index(1.0)
        surv = (ens.status[:, j] == 0).mean()
        assert surv == pytest.approx(math.exp(-1.0 / 3.0), abs=0.01)

    def test_explosions_excluded(self):
        model = _model(0.3, [parse_expression("x1^3")], [[0.0]], box=((-2.0, 2.0),))
        spec = SimSpec(x0=[1.0], horizon=1.0, dt=1e-3, n_paths=200, rng_seed=75,
                       explosion_threshold=1e5)
        ens = sample_autonomous(model, spec)
        rep = killing_compensator_check(ens, model, (0.1,))
        assert rep.excluded_paths > 0


class TestExponentialMartingale:
    def test_bm_closed_form(self, bm_triplet, bm_model):
        ens = sample_levy(bm_triplet, _spec(dt=0.01, seed=76))
        rep = exponential_martingale_check(ens, bm_model, [1.0], (0.25, 0.5, 1.0))
        assert rep.passed

    def test_killed_levy(self):
        tri = LevyTriplet(0.5, [0.0], [[0.0]], ZeroMeasure())
        ens = sample_levy(tri, _spec(dt=0.01, seed=77))
        rep = exponential_martingale_check(ens, tri, [1.7], (0.25, 0.5, 1.0))
        assert rep.passed

    def test_autonomous_killing_and_diffusion(self):
        model = _model(parse_expression("1 + sin(x1)^2"), [0.0], [[1.0]])
        ens = sample_autonomous(model, _spec(dt=0.005, seed=78))
        rep = exponential_martingale_check(ens, model, [1.0], (0.25, 0.5, 1.0))
        assert rep.passed, rep.rows

    def test_agrees_with_simulator_invariant(self, cp_triplet):
        # the constant-model statistic and the raw exponent identity must
        # deliver the same verdict on a shared ensemble
        ens = sample_levy(cp_triplet, _spec(n=10_000, dt=0.05, seed=79))
        rep = exponential_martingale_check(ens, cp_triplet, [1.0], (0.5, 1.0))
        from symbolkit.triplet import eval_exponent
        from conftest import complex_se
        verdicts = []
        for t in (0.5, 1.0):
            e = ens.e_xi_at(t, [1.0])
            target = np.exp(-t * eval_exponent(cp_triplet, [1.0]))
            verdicts.append(abs(e.mean() - target) <= 3 * complex_se(e))
        assert rep.passed == all(verdicts)

    def test_l_process_starts_at_zero(self, bm_model, bm_triplet):
        ens = sample_levy(bm_triplet, _spec(n=50, dt=0.1, seed=80))
        L = l_process(ens, bm_model, [1.0])
        assert np.all(L[:, 0] == 0.0)
        # constant model: dL/dt = -psi(u) everywhere before killing
        expected = -complex(0.5)
        assert np.allclose(L[:, -1] / 1.0, expected, atol=1e-9)


class TestCanonicalResidual:
    def test_bm_with_drift(self):
        tri = LevyTriplet(0.0, [2.0], [[1.0]], ZeroMeasure())
        ens = sample_levy(tri, _spec(dt=0.01, seed=81))
        model = StateModel.from_triplet(tri)
        rep = canonical_representation_residual(ens, model)
        assert rep.passed
        # residual at T reduces to X_T - 2T whose mean is ~0
        j = ens.time_index(1.0)
        assert abs(ens.values[:, j, 0].mean() - 2.0) < 0.02

    def test_compound_poisson_all_jumps_big(self):
        tri = LevyTriplet(0.0, [0.0], [[0.0]], DiscreteMeasure([[3.0]], [1.0]),
                          CutoffFunction(radius=1.0))
        ens = sample_levy(tri, _spec(n=4000, dt=0.01, seed=82))
        rep = canonical_representation_residual(ens, StateModel.from_triplet(tri))
        assert rep.passed
        for row in rep.rows:
            # all jumps are big: the residual is identically zero
            assert abs(row["mean_residual"][0]) < 1e-12

    def test_alpha_stable_symmetric(self):
        tri = LevyTriplet(0.0, [0.0], [[0.0]], StableMeasure(1.5, 1.0))
        ens = sample_levy(tri, _spec(n=N, dt=0.005, seed=83))
        rep = canonical_representation_residual(ens, StateModel.from_triplet(tri))
        assert rep.passed

    def test_killed_paths_handled(self):
        model = _model(0.8, [1.0], [[1.0]])
        ens = sample_autonomous(model, _spec(n=5000, dt=0.01, seed=84))
        rep = canonical_representation_residual(ens, model)
        assert rep.passed


def test_stopped_data_never_breaks_checks():
    # ensemble mixing explosion and killing; checks must run without
    # raising and report exclusions
    model = _model(parse_expression("0.5 + 0*x1"), [parse_expression("x1^3")],
                   [[0.0]], box=((-2.0, 2.0),))
    spec = SimSpec(x0=[1.0], horizon=1.0, dt=1e-3, n_paths=300, rng_seed=85,
                   explosion_threshold=1e5)
    ens = sample_autonomous(model, spec)
    rep1 = killing_compensator_check(ens, model, (0.1, 0.2))
    rep2 = exponential_martingale_check(ens, model, [0.5], (0.1, 0.2))
    rep3 = canonical_representation_residual(ens, model)
    assert rep1.excluded_paths == rep2.excluded_paths == rep3.excluded_paths > 0


class TestSdeEnsembles:
    def test_killed_driver_compensator_and_exponential(self):
        from symbolkit.simulate import make_sde_model, sample_sde
        driver = LevyTriplet(0.4, [0.0], [[1.0]], ZeroMeasure())
        model = make_sde_model(parse_expression("1 + 0.1*x1"), driver)
        ens = sample_sde(model.sde.coefficient, driver,
                         _spec(n=10_000, dt=0.005, seed=86, x0=(0.5,)))
        rep = killing_compensator_check(ens, model, (0.25, 0.5, 1.0))
        assert rep.passed, rep.rows
        rep2 = exponential_martingale_check(ens, model, [0.8], (0.25, 0.5, 1.0))
        assert rep2.passed, rep2.rows
        with pytest.raises(ValueError, match="autonomous or constant"):
            canonical_representation_residual(ens, model)
