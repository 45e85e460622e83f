import math

import numpy as np
import pytest

from symbolkit.extended import (
    ExtPoint,
    Path,
    PathInvariantError,
    PointKind,
    UndefinedExtendedOperation,
    classify_killing,
    e_xi,
    ext_add,
    ext_norm,
    ext_scale,
)

INF_PT = ExtPoint.infinity(2)
DELTA_PT = ExtPoint.delta(2)
FIN = ExtPoint.finite([1.0, 2.0])


class TestArithmeticTables:
    """Exhaustive behaviour over all variant combinations."""

    def test_add_table(self):
        assert ext_add(DELTA_PT, [1.0, 2.0]) == ExtPoint.delta(2)
        assert ext_add(INF_PT, DELTA_PT) == ExtPoint.delta(2)
        assert ext_add(DELTA_PT, INF_PT) == ExtPoint.delta(2)
        assert ext_add(DELTA_PT, DELTA_PT) == ExtPoint.delta(2)
        assert ext_add(INF_PT, [3.0, -1.0]) == ExtPoint.infinity(2)
        assert ext_add(FIN, INF_PT) == ExtPoint.infinity(2)
        assert ext_add(FIN, DELTA_PT) == ExtPoint.delta(2)
        assert ext_add(ExtPoint.finite([1.0, 2.0]), [3.0, 4.0]) == ExtPoint.finite([4.0, 6.0])

    def test_infinity_plus_infinity_undefined(self):
        with pytest.raises(UndefinedExtendedOperation):
            ext_add(INF_PT, INF_PT)

    def test_scale_table(self):
        assert ext_scale(DELTA_PT, 0.0) == ExtPoint.finite([0.0, 0.0])
        assert ext_scale(INF_PT, 0.0) == ExtPoint.finite([0.0, 0.0])
        assert ext_scale(INF_PT, 3.0) == ExtPoint.infinity(2)
        assert ext_scale(INF_PT, -2.0) == ExtPoint.infinity(2)
        assert ext_scale(DELTA_PT, -1.0) == ExtPoint.delta(2)
        assert ext_scale(ExtPoint.finite([2.0, 0.0]), 2.0) == ExtPoint.finite([4.0, 0.0])

    def test_norms(self):
        assert ext_norm(DELTA_PT) == math.inf
        assert ext_norm(INF_PT) == math.inf
        assert ext_norm(ExtPoint.finite([3.0, 4.0])) == pytest.approx(5.0)

    def test_subtraction_via_composition(self):
        # Delta - r and infinity - r via add(p, scale(q, -1))
        assert ext_add(DELTA_PT, ext_scale(ExtPoint.finite([1.0, 1.0]), -1.0)) \
            == ExtPoint.delta(2)
        assert ext_add(INF_PT, ext_scale(ExtPoint.finite([1.0, 1.0]), -1.0)) \
            == ExtPoint.infinity(2)
        assert ext_add(DELTA_PT, ext_scale(INF_PT, -1.0)) == ExtPoint.delta(2)


def test_e_xi():
    assert e_xi(ExtPoint.finite([0.0]), [5.0]) == pytest.approx(1.0)
    assert e_xi(DELTA_PT, [1.0, 1.0]) == 0.0
    assert e_xi(INF_PT, [1.0, 1.0]) == 0.0
    assert e_xi(ExtPoint.finite([math.pi]), [1.0]) == pytest.approx(-1.0)


def test_finite_point_rejects_nan():
    with pytest.raises(ValueError):
        ExtPoint.finite([np.nan])


# ---------------------------------------------------------------------------
# paths and killing classification

def _const_path(value=0.0, t_max=1.0, dt=0.1):
    m = int(round(t_max / dt)) + 1
    times = np.arange(m) * dt
    vals = np.full((m, 1), value)
    return Path(times, vals, np.zeros(m, dtype=np.int8))


def _killed_path(jump_at=0.3, dt=0.1, value=0.5):
    m = 11
    times = np.arange(m) * dt
    vals = np.full((m, 1), value)
    status = np.zeros(m, dtype=np.int8)
    k = int(round(jump_at / dt))
    status[k:] = 2
    vals[k:] = np.nan
    return Path(times, vals, status)


def _exploding_tan_path(dt=0.001):
    times = np.arange(0.0, 1.0 + dt / 2, dt)
    vals = np.tan(math.pi * times[:-1] / 2.0)[:, None]
    status = np.zeros(len(times), dtype=np.int8)
    status[-1] = 1
    vals = np.vstack([vals, [[np.nan]]])
    return Path(times, vals, status)


def test_classify_constant_path():
    kt = classify_killing(_const_path(), n_max=5)
    assert kt.zeta_partial == math.inf
    assert kt.zeta_delta == math.inf
    assert kt.zeta_infty == math.inf
    assert all(v == math.inf for v in kt.sigma_prime.values())


def test_classify_sudden_kill():
    kt = classify_killing(_killed_path(), n_max=4)
    assert kt.zeta_delta == pytest.approx(0.3)
    assert kt.sigma_prime[1] == pytest.approx(0.3)
    assert kt.zeta_infty == math.inf
    assert kt.zeta_partial == pytest.approx(0.3)


def test_classify_explosion_tan_path():
    dt = 0.001
    kt = classify_killing(_exploding_tan_path(dt), n_max=8)
    assert kt.zeta_infty == pytest.approx(1.0)
    assert kt.zeta_delta == math.inf
    prev = 0.0
    for n in range(1, 9):
        analytic = (2.0 / math.pi) * math.atan(n)
        assert abs(kt.sigma_prime[n] - analytic) <= dt + 1e-12
        assert kt.sigma_prime[n] >= prev
        assert kt.sigma_prime[n] < 1.0
        prev = kt.sigma_prime[n]


def test_exclusivity_and_alpha_monotone():
    for path, n_max in ((_killed_path(), 6), (_exploding_tan_path(), 6)):
        kt = classify_killing(path, n_max=n_max)
        assert math.isinf(kt.zeta_delta) or math.isinf(kt.zeta_infty)
        assert kt.zeta_partial == min(kt.zeta_delta, kt.zeta_infty)
        alphas = [kt.alpha[n] for n in range(1, n_max + 1)]
        assert all(a <= b + 1e-15 for a, b in zip(alphas, alphas[1:]))
        # alpha_n approaches the earlier of the two killing times
        target = min(kt.zeta_delta, kt.zeta_infty)
        if math.isfinite(target):
            assert alphas[-1] <= target + 1e-12


def test_classification_invariant_under_grid_refinement():
    # piecewise-constant fixture sampled at two grid resolutions
    def build(dt):
        times = np.round(np.arange(0.0, 1.0 + dt / 2, dt), 12)
        vals = np.where(times < 0.5, 0.25, 1.5)[:, None]
        status = np.zeros(len(times), dtype=np.int8)
        return Path(times, vals, status)

    a = classify_killing(build(0.1), n_max=3)
    b = classify_killing(build(0.01), n_max=3)
    assert a.sigma_prime == b.sigma_prime
    assert a.zeta_delta == b.zeta_delta
    assert a.zeta_infty == b.zeta_infty


def test_path_invariants():
    times = np.arange(4) * 0.1
    status = np.array([0, 2, 0, 0], dtype=np.int8)
    with pytest.raises(PathInvariantError):
        Path(times, np.zeros((4, 1)), status)
    status = np.array([0, 1, 0, 0], dtype=np.int8)
    with pytest.raises(PathInvariantError):
        Path(times, np.zeros((4, 1)), status)
    # infinity -> delta is allowed
    status = np.array([0, 1, 1, 2], dtype=np.int8)
    vals = np.zeros((4, 1))
    vals[1:] = np.nan
    Path(times, vals, status)


def test_csv_round_trip(tmp_path):
    p = _killed_path()
    f = tmp_path / "path.csv"
    p.to_csv(f)
    q = Path.from_csv(f)
    assert np.array_equal(p.status, q.status)
    assert np.allclose(p.times, q.times)
    finite = p.status == 0
    assert np.allclose(p.values[finite], q.values[finite])
    header = f.read_text().splitlines()[0]
    assert header == "time,x1,status"
