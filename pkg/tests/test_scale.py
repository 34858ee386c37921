import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from jetzoom.scale import (ONE, SATURATION_GAP, ZERO, ScaleBatch, ScalePoint, ShellSchedule,
                           deep_schedule, default_schedule, norm_ratio, shell_points, sp_add,
                           sp_mul)

LN2, LN3 = math.log(2.0), math.log(3.0)

nonzero = st.floats(min_value=-1e150, max_value=1e150, allow_nan=False).filter(
    lambda v: abs(v) > 1e-150)


def test_equality_ignores_logmag_of_zero():
    assert ScalePoint(0, 5.0) == ScalePoint(0, -3.0) == ZERO
    assert ScalePoint(1, 2.0) != ScalePoint(-1, 2.0)
    assert hash(ScalePoint(0, 1.0)) == hash(ZERO)


def test_bad_fields_rejected():
    with pytest.raises(ValueError):
        ScalePoint(2, 0.0)
    with pytest.raises(ValueError):
        ScalePoint(1, math.inf)
    with pytest.raises(ValueError):
        ScalePoint.from_float(math.nan)


@given(nonzero)
def test_round_trip(x):
    p = ScalePoint.from_float(x)
    assert p.sign == (1 if x > 0 else -1)
    assert p.logmag == pytest.approx(math.log(abs(x)), rel=1e-15, abs=1e-15)
    assert p.to_float() == pytest.approx(x, rel=1e-13)


def test_mul_examples():
    assert sp_mul(ONE, ONE) == ONE
    r = sp_mul(ScalePoint(-1, LN2), ScalePoint(1, LN3))
    assert r.sign == -1 and r.logmag == pytest.approx(math.log(6.0), abs=1e-15)
    assert sp_mul(ZERO, ScalePoint(1, 700.0)) == ZERO


def test_add_examples():
    r = sp_add(ScalePoint(1, LN2), ScalePoint(1, LN3))
    assert r.sign == 1 and r.logmag == pytest.approx(math.log(5.0), abs=1e-15)
    assert sp_add(ONE, ScalePoint(-1, 0.0)) == ZERO
    assert sp_add(ScalePoint(1, -2000.0), ScalePoint(1, -3000.0)) == ScalePoint(1, -2000.0)


def test_add_exact_with_zero_and_saturation():
    p = ScalePoint(-1, -1e6)
    assert sp_add(p, ZERO) is p and sp_add(ZERO, p) is p
    big = ScalePoint(1, 0.0)
    assert sp_add(big, ScalePoint(-1, -SATURATION_GAP - 1)) == big


@given(nonzero, nonzero)
def test_arithmetic_agrees_with_floats(x, y):
    px, py = ScalePoint.from_float(x), ScalePoint.from_float(y)
    assert sp_mul(px, py).to_float() == pytest.approx(x * y, rel=1e-12)
    s = x + y
    # cancellation amplifies the input rounding of ln|x|, ln|y|
    cond = (abs(x) + abs(y)) / abs(s) if s else math.inf
    if cond < 1e3:
        assert sp_add(px, py).to_float() == pytest.approx(s, rel=1e-12 * cond)


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_add_relative_error_small_gap(a, b):
    # log-sum-exp against mpmath-free closed form with the larger term factored out
    s = sp_add(ScalePoint(1, a), ScalePoint(1, b))
    hi, lo = max(a, b), min(a, b)
    assert s.logmag == pytest.approx(hi + math.log1p(math.exp(lo - hi)), rel=4e-16, abs=1e-300)


def test_text_form():
    for p in (ZERO, ScalePoint(1, -2575.0), ScalePoint(-1, 3.25)):
        assert ScalePoint.parse(str(p)) == p
    assert str(ScalePoint(-1, -2575.0)) == "-exp(-2575.0)"
    assert ScalePoint.parse("0.5") == ScalePoint.from_float(0.5)
    with pytest.raises(ValueError):
        ScalePoint.parse("exp(x)")


# ---------------------------------------------------------------------------
# batches


def test_batch_add_matches_float():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(50, 2)), rng.normal(size=(50, 2))
    out = (ScaleBatch.from_float(a) + ScaleBatch.from_float(b)).to_float()
    assert np.allclose(out, a + b, rtol=1e-15, atol=0)


def test_deep_differences_keep_relative_precision():
    # (x + y) - x at depth exp(-1e9) equals y to working precision
    x = ScaleBatch(np.full(3, -1e9), np.array([[1.0], [-0.5], [0.3]]))
    y = ScaleBatch(np.full(3, -1e9 - 20.0), np.array([[1.0], [1.0], [-2.0]]))
    d = (x + y) - x
    assert np.allclose(norm_ratio(d, y), 1.0, rtol=1e-6)


def test_norm_ratio_zero_handling():
    z = ScaleBatch.zeros(2, 1)
    one = ScaleBatch.from_float([1.0, 2.0])
    assert np.all(np.isnan(norm_ratio(one, z)))
    assert np.all(norm_ratio(z, one) == 0.0)


def test_split_rows_and_hstack():
    b = ScaleBatch(np.array([-500.0, 3.0]), np.array([[3.0, 4.0], [0.0, 0.0]]))
    ln, u = b.split_rows()
    assert ln[0] == pytest.approx(-500.0 + math.log(5.0))
    assert np.isneginf(ln[1]) and not u[1].any()
    h = ScaleBatch.from_float([1.0]).hstack(ScaleBatch.from_float([2.0]))
    assert np.allclose(h.to_float(), [[1.0, 2.0]])


# ---------------------------------------------------------------------------
# schedules


def test_shell_points_examples():
    s = ShellSchedule(ONE, 0.5, 3, 2, 7)
    p0 = shell_points(s, 0)
    assert len(p0) == 2
    assert all(0.5 < abs(p.to_float()) <= 1.0 for p in p0)
    assert shell_points(s, 0) == p0
    assert all(0.125 < abs(p.to_float()) <= 0.25 for p in shell_points(s, 2))
    with pytest.raises(IndexError):
        shell_points(s, 3)


def test_radii_strictly_decrease():
    s = default_schedule()
    r = s.radius_log(np.arange(s.shells + 1))
    assert np.all(np.diff(r) < 0)
    assert r[1] - r[0] == pytest.approx(math.log(0.5))


def test_log_uniform_within_shell():
    s = ShellSchedule(ONE, 0.5, 1, 20000, 3)
    u = (s.radius_log(0) - s.log_samples(0)) / s.step
    assert stats.kstest(u, "uniform").statistic < 0.05


def test_determinism_and_seed_dependence():
    a, _ = default_schedule(shells=5).all_batches()
    b, _ = default_schedule(shells=5).all_batches()
    c, _ = default_schedule(shells=5, rng_seed=1).all_batches()
    assert np.array_equal(a.mant, b.mant) and np.array_equal(a.scale, b.scale)
    assert not np.array_equal(a.scale, c.scale)


def test_shell_of_inverts_sampling():
    s = ShellSchedule(ScalePoint(1, -3.0), 0.25, 10, 64, 0)
    x, idx = s.all_batches()
    assert np.array_equal(s.shell_of(x.norm_log()), idx)


def test_deep_schedule_reaches_depth():
    s = deep_schedule(1e7, shells=200)
    assert s.radius_log(s.shells) == pytest.approx(-1e7)
    x, _ = s.all_batches()
    assert x.norm_log().min() >= -1e7 - 1e-3


@pytest.mark.parametrize("kw", [dict(ratio=1.0), dict(ratio=0.0), dict(shells=0),
                                dict(samples_per_shell=0), dict(r0=ScalePoint(-1, 0.0))])
def test_invalid_schedules(kw):
    with pytest.raises(ValueError):
        ShellSchedule(**kw)


@settings(max_examples=30)
@given(st.floats(-50, 50), st.floats(0.05, 0.95), st.integers(1, 6), st.integers(0, 5))
def test_samples_lie_in_their_shell(l0, ratio, j, seed):
    s = ShellSchedule(ScalePoint(1, l0), ratio, 7, 16, seed)
    L = s.log_samples(j)
    assert np.all(L <= s.radius_log(j) + 1e-12)
    assert np.all(L > s.radius_log(j + 1) - 1e-12)
