import math
import warnings

import mpmath
import numpy as np
import pytest

from jetzoom import gallery as G
from jetzoom.germs import compose, identity_germ
from jetzoom.jets import quasi_distance
from jetzoom.scale import ScaleBatch, default_schedule


def ratio_at(g, logmag, sign=1.0):
    x = ScaleBatch.from_logmag(np.atleast_1d(sign) * np.ones(np.size(logmag)),
                               np.atleast_1d(logmag))
    y = g.eval(x)
    return (y.mant[:, 0] / x.mant[:, 0]) * np.exp(y.scale - x.scale)


@pytest.mark.parametrize("text,value", [("1.5", 1.5), ("sqrt2", math.sqrt(2)),
                                        ("2pi", 2 * math.pi), ("pi/2", math.pi / 2),
                                        ("-3e-2", -0.03), ("e", math.e), ("1/3", 1 / 3)])
def test_parse_real(text, value):
    assert G.parse_real(text) == pytest.approx(value, rel=1e-15)


def test_parse_real_rejects_garbage():
    with pytest.raises(ValueError):
        G.parse_real("two")


def test_names_resolve():
    for n in ["zero", "abs", "identity", "mul:lambda=3", "giseh", "fractal_wave", "uncanny",
              "uncanny_ext", "bifractal:a=1,b=sqrt2", "f1", "f2", "scaled_wave:r=2pi",
              "jet_translation:a=1,b=2"]:
        assert G.make_named(n).dim_in == 1
    with pytest.raises(G.UnknownGerm):
        G.make_named("nope")
    with pytest.raises(ValueError):
        G.make_named("bifractal:a")


def test_bifractal_rational_rejected():
    with pytest.raises(ValueError, match="irrational"):
        G.bifractal(1.0, 1.0)
    with pytest.raises(ValueError, match="irrational"):
        G.bifractal(1.0, 2.5)


def test_bifractal_non_default_warns():
    with pytest.warns(UserWarning):
        G.bifractal(1.0, math.pi)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        G.bifractal()


def test_fractal_wave_scaling_in_log_form():
    L = np.random.default_rng(0).uniform(-30, 0, 200)
    assert np.allclose(ratio_at(G.fractal_wave(), L - 2 * math.pi),
                       ratio_at(G.fractal_wave(), L), rtol=0, atol=1e-13)


def test_uncanny_deep_maxima():
    for k in (0, 1, 2):
        L = -math.exp(math.pi / 2 + 2 * k * math.pi)
        assert ratio_at(G.uncanny(), L)[0] == pytest.approx(1.0, abs=1e-15)


def test_f2_zeros():
    k = np.arange(1, 11)
    x = 1 / np.sqrt(2 * k * math.pi)
    # rounding of 1/x**2 near 2k pi leaves |sin| ~ k * 1e-15
    assert np.all(np.abs(G.f2()(x)) <= 1e-14 * x ** 2 * k)


def _mp(fn, x):
    with mpmath.workdps(40):
        return float(fn(mpmath.mpf(float(x))))


@pytest.mark.parametrize("name,fn", [
    ("f1", lambda z: z * mpmath.sin(1 / z)),
    ("f2", lambda z: z ** 2 * mpmath.sin(1 / z ** 2)),
    ("fractal_wave", lambda z: z * mpmath.sin(mpmath.log(abs(z)))),
    ("uncanny", lambda z: z * mpmath.sin(mpmath.log(abs(mpmath.log(abs(z)))))),
    ("bifractal", lambda z: z * mpmath.sin(2 * mpmath.pi * mpmath.log(abs(z)) / (1 if z < 0 else mpmath.sqrt(2)))),
])
def test_values_against_mpmath(name, fn):
    g = G.make_named(name)
    rng = np.random.default_rng(1)
    x = rng.choice([-1, 1], 200) * np.exp(rng.uniform(-8, -0.1, 200))
    ref = np.array([_mp(fn, v) for v in x])
    # f1 and f2 lose |phase| * eps to the float argument of sin
    atol = np.abs(x) * 1e-12 * (np.abs(1 / x) ** 2 if name in ("f1", "f2") else 1)
    assert np.all(np.abs(g(x) - ref) <= atol + 1e-15 * np.abs(x))


def test_giseh_deep_values():
    # x = 0.5 * 3**-1000: g(x) = 3**-1000 / 6, ratio 1/3
    L = math.log(0.5) - 1000 * math.log(3)
    assert ratio_at(G.giseh(), L)[0] == pytest.approx(1 / 3, rel=1e-12)
    assert ratio_at(G.giseh(), L, -1.0)[0] == -1.0  # g(x) = |x| for x < 0


def test_periodic_to_fractal_sine_is_fractal_wave():
    f = G.periodic_to_fractal(G.sine_profile(1))
    x = np.random.default_rng(2).uniform(-1, 1, 1000)
    assert np.array_equal(f(x), G.fractal_wave()(x))


def test_periodic_constant_profile_is_linear():
    p = G.PeriodicProfile(1.0, lambda t: np.full(np.shape(t), 0.7), 0.0)
    x = np.random.default_rng(3).uniform(-1, 1, 100)
    assert np.allclose(G.periodic_to_fractal(p)(x), 0.7 * x, rtol=1e-15)


def test_periodic_fractal_identity():
    T = 3.0
    f = G.periodic_to_fractal(G.sine_profile(2, T))
    x = np.random.default_rng(4).uniform(-1, 1, 1000)
    k = math.exp(-T)
    assert np.max(np.abs(f(k * x) - k * f(x)) / np.abs(k * x)) <= 1e-12


def test_profile_validation():
    with pytest.raises(ValueError, match="periodic"):
        G.PeriodicProfile(1.0, np.sin, 1.0).validate()
    with pytest.raises(ValueError, match="Lipschitz"):
        G.PeriodicProfile(2 * math.pi, lambda t: np.sin(3 * t), 1.0).validate()


def test_affine_tangent():
    a = G.affine_tangent([0.0], [[1.0]], [0.0])
    x = np.linspace(-1, 1, 11)
    assert np.array_equal(a(x), identity_germ()(x))
    with pytest.raises(ValueError):
        G.affine_tangent([0.0], [[1.0, 2.0]], [0.0])


def test_affine_norm_is_operator_norm():
    A = np.array([[2.0, 1.0], [0.0, -1.0]])
    g = G.affine_tangent([0.0, 0.0], A, [0.0, 0.0])
    from jetzoom.germs import zero_germ
    d = quasi_distance(g, zero_germ(2, 2), default_schedule(shells=40))
    assert d.estimate == pytest.approx(np.linalg.norm(A, 2), rel=1e-6)


def test_affine_composed_with_itself():
    A = np.array([[2.0, 1.0], [0.5, -1.0]])
    g = G.affine_tangent([0.0, 0.0], A, [0.0, 0.0])
    x = np.random.default_rng(5).normal(size=(20, 2))
    assert np.allclose(compose(g, g)(x), x @ (A @ A).T, rtol=1e-14)


@pytest.mark.parametrize("name", ["abs", "identity", "mul:lambda=3", "fractal_wave",
                                  "scaled_wave:r=2pi", "bifractal", "zero"])
def test_point_function_matches_germ(name):
    fn, g = G.point_function(name), G.make_named(name)
    x = np.random.default_rng(6).uniform(-2, 2, 50)
    with mpmath.workdps(30):
        ref = np.array([float(fn(mpmath.mpf(v))) for v in x])
    assert np.allclose(g(x), ref, rtol=1e-13, atol=1e-15)


def test_point_function_unknown():
    with pytest.raises(G.UnknownGerm):
        G.point_function("giseh")


def test_recommended_schedules():
    m, lin = G.recommended_schedules(G.uncanny_ext())
    assert m.radius_log(m.shells) < -math.exp(math.pi / 2 + 2 * math.pi)
    assert lin.radius_log(lin.shells) == pytest.approx(-1e7)
    assert G.recommended_schedules(G.abs_germ())[0] == default_schedule()
