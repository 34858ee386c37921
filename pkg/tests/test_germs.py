import math

import numpy as np
import pytest

from jetzoom import gallery as G
from jetzoom.germs import (Germ, GermMeta, add, compose, homog_translate, identity_germ,
                           linear_germ, restrict, same_frame, scalar_multiple, stretch,
                           translate_to_zero, zero_germ)
from jetzoom.jets import quasi_distance
from jetzoom.scale import ScaleBatch, ShellSchedule, default_schedule

X = np.random.default_rng(0).uniform(-0.9, 0.9, 500)


def test_zero_displacement_maps_to_zero_without_calling_action():
    calls = []

    def action(x):
        calls.append(len(x))
        return ScaleBatch(x.scale, x.mant * 2)

    g = Germ(action)
    out = g.eval(ScaleBatch.from_float([0.0, 1.0, 0.0]))
    assert np.array_equal(out.to_float()[:, 0], [0.0, 2.0, 0.0])
    assert calls == [1]
    assert Germ(action)(np.zeros(3)).tolist() == [0.0, 0.0, 0.0]


def test_eval_checks_dimensions():
    g = linear_germ(np.eye(2))
    with pytest.raises(ValueError):
        g.eval(ScaleBatch.from_float([1.0]))
    with pytest.raises(ValueError):
        Germ(lambda x: x, 1, 1, base=[0.0, 0.0])


def test_compose_laws():
    v = G.abs_germ()
    assert np.array_equal(compose(identity_germ(), v)(X), np.abs(X))
    assert np.allclose(compose(scalar_multiple(2.0), scalar_multiple(3.0))(X), 6 * X, rtol=1e-15)
    assert np.array_equal(compose(v, v)(X), np.abs(X))


def test_compose_associative():
    f, g, h = G.fractal_wave(), G.giseh(), scalar_multiple(-1.5)
    a = compose(h, compose(g, f))(X)
    b = compose(compose(h, g), f)(X)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_compose_base_mismatch():
    f = homog_translate(G.abs_germ(), [1.0], [2.0])
    with pytest.raises(ValueError, match="base-point"):
        compose(G.abs_germ(), f)


def test_compose_shrinks_domain():
    g = G.uncanny()
    c = compose(g, scalar_multiple(4.0))
    assert c.domain_radius == pytest.approx(0.25)
    # no metadata bound: an empirical bound (times 2) is used instead
    f = Germ(lambda x: ScaleBatch(x.scale, 3 * x.mant))
    assert compose(g, f).domain_radius == pytest.approx(1 / 6, rel=1e-9)


def test_compose_without_finite_bound():
    f = Germ(lambda x: ScaleBatch(x.scale, x.mant * np.inf), meta=GermMeta(lipschitz_bound=math.inf))
    with pytest.raises(ValueError):
        compose(G.uncanny(), f)


def test_translate_to_zero_examples():
    t = G.jet_translation([2.0], [5.0])
    z = translate_to_zero(t)
    assert same_frame(z, identity_germ())
    assert np.array_equal(z(X), X)
    g = G.giseh()
    assert translate_to_zero(g) is g


def test_translate_and_homog_translate_inverse():
    h = G.fractal_wave()
    moved = homog_translate(h, [1.0], [0.0])
    assert np.array_equal(moved.base, [1.0])
    assert np.array_equal(moved(X), h(X))
    back = translate_to_zero(moved)
    assert same_frame(back, h) and np.array_equal(back(X), h(X))
    with pytest.raises(ValueError):
        homog_translate(moved, [0.0], [0.0])


def test_homog_translate_zero_is_constant():
    z = homog_translate(zero_germ(), [3.0], [-1.0])
    assert np.array_equal(z(X), np.zeros_like(X))
    assert z.base_image.tolist() == [-1.0]


def test_stretch_preserves_inside_and_zero_outside():
    u = G.uncanny()
    s = stretch(u)
    inside = X[np.abs(X) < 1]
    assert np.array_equal(s(inside), u(inside))
    assert np.array_equal(s(np.array([1.0, -2.0, 5.0])), np.zeros(3))
    assert np.array_equal(restrict(s, 1.0)(inside), u(inside))
    with pytest.raises(ValueError):
        stretch(u, 0.5)
    with pytest.raises(ValueError):
        restrict(u, 2.0)


def test_admissible_masks_domain_and_floor():
    u = G.uncanny()
    b = ScaleBatch.from_float([0.5, 1.0, 2.0])
    assert u.admissible(b).tolist() == [True, False, False]
    f1 = G.f1()
    deep = ScaleBatch.from_logmag(np.ones(2), [-10.0, -800.0])
    assert f1.admissible(deep).tolist() == [True, False]


def test_add_germs():
    s = add(G.abs_germ(), scalar_multiple(0.5))
    assert np.allclose(s(X), np.abs(X) + X / 2, rtol=1e-15)
    assert s.meta.lipschitz_bound == 1.5
    with pytest.raises(ValueError):
        add(G.abs_germ(), linear_germ(np.eye(2)))


# ---------------------------------------------------------------------------
# metadata is a certificate: check every populated field on samples

GALLERY = ["zero", "abs", "identity", "mul:lambda=-2.5", "giseh", "fractal_wave", "uncanny",
           "uncanny_ext", "bifractal", "f1", "f2", "scaled_wave:r=2pi", "scaled_wave:r=1.5"]


def _claiming(pred):
    return [n for n in GALLERY if pred(G.make_named(n).meta)]


def _points(g: Germ, n=4000, seed=5):
    rng = np.random.default_rng(seed)
    r = min(g.domain_radius, 1.0)
    # log-uniform magnitudes; bounds near 0 are the local claims
    L = rng.uniform(math.log(r) - 30.0, math.log(r) - 1e-9, n)
    return rng.choice([-1.0, 1.0], n) * np.exp(L)


@pytest.mark.parametrize("name", _claiming(lambda m: m.lipschitz_bound is not None))
def test_lipschitz_bound_certified(name):
    g = G.make_named(name)
    k = g.meta.lipschitz_bound
    x = _points(g)
    if g.meta.deep_zoom:
        x = x[np.abs(x) < math.exp(-1.0)]  # the bound 2 is claimed on |x| < 1/e
    y = x * (1 + np.random.default_rng(9).uniform(-0.3, 0.3, x.size))
    fx, fy = g(x), g(y)
    assert np.all(np.abs(fx - fy) <= k * np.abs(x - y) * (1 + 1e-12) + 1e-300)


@pytest.mark.parametrize("name", _claiming(lambda m: m.parity is not None))
def test_parity_certified(name):
    g = G.make_named(name)
    x = _points(g)
    sign = 1.0 if g.meta.parity == "even" else -1.0
    assert np.allclose(g(-x), sign * g(x), rtol=1e-14, atol=0)


@pytest.mark.parametrize("name", _claiming(lambda m: m.exact_fractal_ratio is not None))
def test_fractal_ratio_certified(name):
    g = G.make_named(name)
    k = g.meta.exact_fractal_ratio
    x = _points(g)
    assert np.max(np.abs(g(k * x) - k * g(x)) / np.abs(k * x)) <= 1e-12


@pytest.mark.parametrize("name", _claiming(lambda m: m.exact_positively_homogeneous))
def test_positive_homogeneity_certified(name):
    g = G.make_named(name)
    x = _points(g)
    for t in (0.3, 0.71, 2.0 ** -40):
        assert np.allclose(g(t * x), t * g(x), rtol=1e-13, atol=0)


def test_stretch_is_isometry_on_jets():
    s = ShellSchedule.from_logs(-1.0, -0.5, 64, 128)
    a = quasi_distance(G.uncanny(), zero_germ(), s)
    b = quasi_distance(stretch(G.uncanny()), zero_germ(), s)
    assert np.array_equal(a.values, b.values)


def test_omega_isometry_bit_exact():
    s = default_schedule(shells=40)
    f, g = G.fractal_wave(), G.abs_germ()
    d0 = quasi_distance(f, g, s)
    d1 = quasi_distance(homog_translate(f, [2.0], [1.0]), homog_translate(g, [2.0], [1.0]), s)
    assert np.array_equal(d0.values, d1.values)
