import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symbolkit.expr import parse_expression
from symbolkit.triplet import (
    Coefficient,
    ConstantMeasureFamily,
    CutoffFunction,
    DensityMeasure,
    DiscreteMeasure,
    LevyTriplet,
    MatrixCoefficient,
    StableMeasure,
    StableMeasureFamily,
    StateModel,
    VectorCoefficient,
    ZeroMeasure,
    check_growth,
    check_sector,
    eval_exponent,
    eval_symbol,
)

from oracles import grid_max_ratio


def test_gaussian_exponent():
    t = LevyTriplet(0.0, [0.0, 0.0], np.eye(2), ZeroMeasure())
    assert eval_exponent(t, [1.0, 1.0]) == pytest.approx(1.0 + 0.0j)


def test_stable_exponent_closed_form():
    t = LevyTriplet(0.0, [0.0], [[0.0]], StableMeasure(1.0, 1.0))
    assert eval_exponent(t, [3.0]) == pytest.approx(3.0 + 0.0j)
    t2 = LevyTriplet(0.0, [0.0], [[0.0]], StableMeasure(0.5, 2.0))
    assert eval_exponent(t2, [4.0]) == pytest.approx(2.0 * 2.0 + 0.0j)


def test_discrete_exponent_exact_sum():
    t = LevyTriplet(0.0, [0.0], [[0.0]], DiscreteMeasure([[2.0]], [0.5]),
                    CutoffFunction(radius=1.0))
    for xi in (0.5, 1.0, -2.0):
        expected = 0.5 * (1.0 - np.exp(2j * xi))
        assert eval_exponent(t, [xi]) == pytest.approx(expected)


def test_discrete_compensated_atom():
    # atom inside the cut-off ball picks up the linear compensator term
    t = LevyTriplet(0.0, [0.0], [[0.0]], DiscreteMeasure([[0.5]], [2.0]),
                    CutoffFunction(radius=1.0))
    xi = 1.7
    expected = -2.0 * (np.exp(0.5j * xi) - 1.0 - 0.5j * xi)
    assert eval_exponent(t, [xi]) == pytest.approx(expected)


def test_killing_only_exponent():
    t = LevyTriplet(0.7, [0.0], [[0.0]], ZeroMeasure())
    assert eval_exponent(t, [0.0]) == pytest.approx(0.7 + 0j)
    assert eval_exponent(t, [5.0]) == pytest.approx(0.7 + 0j)


def test_density_measure_matches_discretised_stable():
    # density c/|y|^(1+alpha) truncated to [eps, ymax] must agree with a
    # fine discrete approximation of the same measure
    alpha, eps, ymax = 1.2, 1e-3, 50.0
    dens = lambda y: abs(y) ** (-1.0 - alpha)
    m = DensityMeasure(dens, eps, ymax)
    cutoff = CutoffFunction(radius=1.0)
    t = LevyTriplet(0.0, [0.0], [[0.0]], m, cutoff)

    grid = np.geomspace(eps, ymax, 20001)
    mids = 0.5 * (grid[1:] + grid[:-1])
    w = np.diff(grid) * dens(mids)
    for xi in (0.5, 2.0):
        inner = np.where(mids <= 1.0,
                         np.exp(1j * mids * xi) - 1 - 1j * mids * xi,
                         np.exp(1j * mids * xi) - 1)
        both = (inner * w).sum() + (np.conj(inner) * w).sum()
        expected = -both
        got = eval_exponent(t, [xi])
        assert got == pytest.approx(expected, rel=1e-4)


def test_density_truncation_bias_bound():
    alpha = 1.2
    m = DensityMeasure(lambda y: abs(y) ** (-1.0 - alpha), 1e-3, 50.0)
    assert m.alpha_hat == pytest.approx(alpha, rel=0.05)
    # extrapolated second moment below eps: 2 eps^(2-alpha)/(2-alpha)
    expected = 2.0 * (1e-3) ** (2 - alpha) / (2 - alpha)
    assert m.small_mass_second_moment == pytest.approx(expected, rel=0.1)
    assert m.truncation_bias_bound([2.0]) == pytest.approx(0.5 * 4 * m.small_mass_second_moment)


def test_psd_validation():
    with pytest.raises(ValueError):
        LevyTriplet(0.0, [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], ZeroMeasure())
    with pytest.raises(ValueError):
        LevyTriplet(-0.1, [0.0], [[1.0]], ZeroMeasure())


def test_invalid_measures():
    with pytest.raises(ValueError):
        StableMeasure(2.5, 1.0)
    with pytest.raises(ValueError):
        DiscreteMeasure([[0.0]], [1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure([[1.0]], [-1.0])


# ---------------------------------------------------------------------------
# symbol of state models

def _stable_like_model():
    return StateModel(
        dim=1,
        kill=Coefficient(0.0, 1),
        drift=VectorCoefficient([0.0], 1),
        covariance=MatrixCoefficient([[0.0]], 1),
        measures=StableMeasureFamily(parse_expression("0.3 + 0.4/(1+x1^2)"), 1.0, 1),
        cutoff=CutoffFunction(),
        domain_box=[[-15.0, 15.0]],
    )


def test_symbol_constant_model_x_independent(bm_model):
    vals = [eval_symbol(bm_model, [x], [1.5]) for x in (-3.0, 0.0, 7.0)]
    assert vals[0] == vals[1] == vals[2]
    assert vals[0] == pytest.approx(0.5 * 1.5 ** 2)


def test_symbol_state_dependent_killing():
    model = StateModel(
        dim=1,
        kill=Coefficient(parse_expression("1 + x1^2"), 1),
        drift=VectorCoefficient([0.0], 1),
        covariance=MatrixCoefficient([[0.0]], 1),
        measures=ConstantMeasureFamily(ZeroMeasure()),
        cutoff=CutoffFunction(),
        domain_box=[[-5.0, 5.0]],
    )
    assert eval_symbol(model, [1.0], [9.0]) == pytest.approx(2.0 + 0j)


def test_symbol_stable_like():
    model = _stable_like_model()
    assert eval_symbol(model, [0.0], [2.0]) == pytest.approx(2.0 ** 0.7)
    assert eval_symbol(model, [10.0], [2.0]) == pytest.approx(2.0 ** (0.3 + 0.4 / 101.0))


def test_sde_symbol():
    from symbolkit.simulate import make_sde_model
    driver = LevyTriplet(0.0, [0.0], [[0.0]], StableMeasure(1.0, 1.0))
    model = make_sde_model(parse_expression("x1"), driver)
    assert eval_symbol(model, [2.0], [1.0]) == pytest.approx(2.0 + 0j)
    assert eval_symbol(model, [-3.0], [2.0]) == pytest.approx(6.0 + 0j)


# ---------------------------------------------------------------------------
# growth and sector conditions

def test_growth_bm(bm_model):
    xg = np.linspace(-1, 1, 5).reshape(-1, 1)
    kg = np.linspace(-10, 10, 41).reshape(-1, 1)
    est = check_growth(bm_model, xg, kg)
    oracle, _ = grid_max_ratio(
        lambda x, xi: eval_symbol(bm_model, [x], [xi]),
        xg[:, 0], kg[:, 0],
        lambda v, xi: abs(v) / (1 + xi ** 2))
    assert est.constant == pytest.approx(oracle)
    assert est.satisfied
    # ratio increases toward the grid edge for the Gaussian symbol
    assert abs(est.witnessed_at[1][0]) == pytest.approx(10.0)


def test_growth_cauchy(cauchy_model):
    kg = np.array([[-2.0], [-1.0], [-0.5], [0.5], [1.0], [2.0]])
    est = check_growth(cauchy_model, np.zeros((1, 1)), kg)
    assert est.constant == pytest.approx(0.5)  # max |xi|/(1+xi^2) at |xi|=1


def test_growth_zero_model():
    model = StateModel.from_triplet(LevyTriplet(0.0, [0.0], [[0.0]], ZeroMeasure()))
    est = check_growth(model, np.zeros((1, 1)), np.linspace(-5, 5, 11).reshape(-1, 1))
    assert est.constant == 0.0


def test_sector_symmetric_real(cauchy_model):
    est = check_sector(cauchy_model, np.zeros((1, 1)),
                       np.linspace(-10, 10, 21).reshape(-1, 1))
    assert est.satisfied
    assert est.constant == pytest.approx(0.0, abs=1e-12)


def test_sector_pure_drift_fails():
    model = StateModel.from_triplet(LevyTriplet(0.0, [1.0], [[0.0]], ZeroMeasure()))
    est = check_sector(model, np.zeros((1, 1)),
                       np.linspace(-10, 10, 21).reshape(-1, 1))
    assert not est.satisfied


def test_sector_bm_drift_constant():
    model = StateModel.from_triplet(LevyTriplet(0.0, [1.0], [[1.0]], ZeroMeasure()))
    grid = np.linspace(-10, 10, 41)
    grid = grid[grid != 0.0]
    est = check_sector(model, np.zeros((1, 1)), grid.reshape(-1, 1))
    assert est.satisfied
    assert est.constant == pytest.approx(2.0 / np.abs(grid).min())


# ---------------------------------------------------------------------------
# structural properties (randomised)

def _random_triplet(rng, symmetric=False, kill=0.0):
    d = 1
    ell = np.zeros(d) if symmetric else rng.normal(size=d)
    q = np.array([[abs(rng.normal()) + 0.1]])
    jumps = rng.uniform(0.2, 3.0, size=(2, 1))
    rates = rng.uniform(0.1, 2.0, size=2)
    if symmetric:
        jumps = np.vstack([jumps, -jumps])
        rates = np.concatenate([rates, rates])
    return LevyTriplet(kill, ell, q, DiscreteMeasure(jumps, rates))


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_symmetric_triplets_have_real_exponent(seed):
    rng = np.random.default_rng(seed)
    t = _random_triplet(rng, symmetric=True)
    xi = rng.uniform(-8, 8)
    val = eval_exponent(t, [xi])
    assert abs(val.imag) < 1e-10
    assert val.real >= -1e-12


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_exponent_at_zero_equals_killing_rate(seed):
    rng = np.random.default_rng(seed)
    a = float(rng.uniform(0, 2))
    t = _random_triplet(rng, kill=a)
    assert eval_exponent(t, [0.0]) == pytest.approx(a + 0j, abs=1e-14)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_conjugate_symmetry_and_nonneg_real(seed):
    rng = np.random.default_rng(seed)
    t = _random_triplet(rng)
    xi = rng.uniform(-8, 8)
    a = eval_exponent(t, [xi])
    b = eval_exponent(t, [-xi])
    assert b == pytest.approx(np.conj(a))
    assert a.real >= -1e-12


def test_measure_additivity():
    cutoff = CutoffFunction(radius=1.0)
    m1 = DiscreteMeasure([[0.4]], [1.3])
    m2 = DiscreteMeasure([[2.5]], [0.7])
    union = DiscreteMeasure([[0.4], [2.5]], [1.3, 0.7])
    base = dict(killing_rate=0.3, drift=[0.5], covariance=[[2.0]], cutoff=cutoff)
    t1 = LevyTriplet(measure=m1, **base)
    t2 = LevyTriplet(measure=m2, **base)
    tu = LevyTriplet(measure=union, **base)
    t0 = LevyTriplet(measure=ZeroMeasure(), **base)
    xi = [1.9]
    assert eval_exponent(tu, xi) == pytest.approx(
        eval_exponent(t1, xi) + eval_exponent(t2, xi) - eval_exponent(t0, xi))


def test_quadrature_nonconvergence_is_diagnostic():
    import warnings
    from symbolkit.triplet import QuadratureError

    m = DensityMeasure(lambda y: 1.0 / abs(y) ** 2.2, 1e-4, 100.0)
    t = LevyTriplet(0.0, [0.0], [[0.0]], m, CutoffFunction(radius=1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(QuadratureError) as err:
            eval_exponent(t, [3e7])  # hopelessly oscillatory at this frequency
    assert err.value.achieved > 1e-8
