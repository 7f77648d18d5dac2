import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypslice import (
    StarBody,
    UsageError,
    body_from_spec,
    dilate,
    integrate_body,
    builtin_density,
    linear_image,
    make_lp_ball,
    minkowski,
    polar,
    radial,
    unconditionality_witness,
)
from hypslice.constants import lp_ball_volume

P_VALUES = [1, 1.5, 2, 3, "inf"]
finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def vec(n):
    return st.lists(finite, min_size=n, max_size=n).map(np.array)


def test_minkowski_examples():
    assert minkowski(make_lp_ball(3, 1), [1, -2, 0.5]) == pytest.approx(3.5, abs=1e-14)
    assert minkowski(make_lp_ball(2, "inf"), [0.3, -0.9]) == pytest.approx(0.9, abs=1e-14)
    assert minkowski(make_lp_ball(4, 2), [1, 1, 1, 1]) == pytest.approx(2.0, abs=1e-14)


def test_minkowski_batch_and_origin():
    k = make_lp_ball(3, 1.5)
    pts = np.array([[0.0, 0, 0], [1, 0, 0], [0, -2, 0]])
    np.testing.assert_allclose(minkowski(k, pts), [0, 1, 2], atol=1e-14)


def test_radial_examples():
    assert radial(make_lp_ball(2, 2), [0.6, 0.8]) == pytest.approx(1.0, abs=1e-14)
    assert radial(make_lp_ball(2, 1), [1 / math.sqrt(2), 1 / math.sqrt(2)]) == pytest.approx(
        1 / math.sqrt(2), abs=1e-14)
    assert radial(make_lp_ball(2, "inf"), [1 / math.sqrt(2), 1 / math.sqrt(2)]) == pytest.approx(
        math.sqrt(2), abs=1e-14)


def test_radial_rejects_non_unit():
    with pytest.raises(UsageError):
        radial(make_lp_ball(2, 2), [1.0, 1.0])


def test_make_lp_ball_volumes():
    leb = builtin_density("lebesgue", 3)
    assert integrate_body(make_lp_ball(3, 1), leb).value == pytest.approx(4 / 3, rel=1e-9)
    assert integrate_body(make_lp_ball(2, 2), builtin_density("lebesgue", 2)).value == pytest.approx(
        math.pi, rel=1e-9)
    box = make_lp_ball(3, "inf", weights=[1, 2, 3])
    assert integrate_body(box, leb).value == pytest.approx(48.0, rel=1e-9)
    assert lp_ball_volume(3, math.inf) * 6 == 48.0


@pytest.mark.parametrize("bad", [0, -1, "x"])
def test_make_lp_ball_rejects_bad_p(bad):
    with pytest.raises(UsageError):
        make_lp_ball(2, bad)


def test_make_lp_ball_rejects_bad_weights():
    with pytest.raises(UsageError):
        make_lp_ball(2, 2, weights=[1, 0])
    with pytest.raises(UsageError):
        make_lp_ball(2, 2, weights=[1, 2, 3])


def test_default_flags():
    assert make_lp_ball(3, 1).is_intersection_body
    assert make_lp_ball(3, 2).is_intersection_body
    assert not make_lp_ball(3, 3).is_intersection_body
    assert make_lp_ball(3, 3, intersection_body=True).is_intersection_body
    assert not make_lp_ball(3, 0.5).is_convex
    assert make_lp_ball(3, 0.5).is_unconditional


def test_linear_image_examples():
    e = linear_image(make_lp_ball(2, 2), np.diag([2.0, 1.0]))
    assert minkowski(e, [2, 0]) == pytest.approx(1.0, abs=1e-14)
    d = linear_image(make_lp_ball(2, 1), np.diag([2.0, 3.0]))
    assert integrate_body(d, builtin_density("lebesgue", 2)).value == pytest.approx(12.0, rel=1e-9)
    assert d.is_unconditional


def test_linear_image_of_nondiagonal_map_drops_unconditional_flag():
    shear = linear_image(make_lp_ball(2, "inf"), [[1, 0.5], [0, 1]])
    assert not shear.is_unconditional
    assert shear.is_convex


def test_linear_image_rejects_singular():
    with pytest.raises(UsageError):
        linear_image(make_lp_ball(2, 2), [[1, 2], [2, 4]])


def test_polar_examples():
    assert minkowski(polar(make_lp_ball(3, 1)), [0.2, -0.7, 0.5]) == pytest.approx(0.7, abs=1e-14)
    assert minkowski(polar(make_lp_ball(2, "inf")), [0.3, -0.4]) == pytest.approx(0.7, abs=1e-14)
    e = polar(linear_image(make_lp_ball(2, 2), np.diag([2.0, 1.0])))
    assert minkowski(e, [1, 0]) == pytest.approx(2.0, abs=1e-14)


def test_polar_rejects_nonconvex():
    with pytest.raises(UsageError):
        polar(make_lp_ball(2, 0.5))


def test_searched_polar_matches_exact():
    # a gauge without lp structure goes through the support-function search
    base = make_lp_ball(3, 1.5)
    opaque = StarBody(dim=3, gauge=base.gauge, label="opaque", is_convex=True, is_unconditional=True)
    x = np.random.default_rng(0).standard_normal((50, 3))
    np.testing.assert_allclose(polar(opaque).gauge(x), polar(base).gauge(x), rtol=1e-7)


def test_unconditionality_witness():
    assert unconditionality_witness(make_lp_ball(3, 1.5)).max_deviation < 1e-14
    shear = linear_image(make_lp_ball(2, "inf"), [[1, 1], [0, 1]])
    assert unconditionality_witness(shear, 1000, 0).max_deviation > 0.1


def test_dilate():
    k = dilate(make_lp_ball(3, 2), 2.5)
    assert minkowski(k, [2.5, 0, 0]) == pytest.approx(1.0)
    with pytest.raises(UsageError):
        dilate(k, 0)


def test_body_from_spec_image_and_polar():
    reg = {}
    base = body_from_spec({"kind": "lp", "n": 2, "p": 2, "name": "disk"}, reg)
    reg["disk"] = base
    img = body_from_spec({"kind": "image", "matrix": [[2, 0], [0, 1]], "base": "disk"}, reg)
    assert minkowski(img, [2, 0]) == pytest.approx(1.0)
    pol = body_from_spec({"kind": "polar", "base": {"kind": "lp", "n": 2, "p": 1}}, reg)
    assert minkowski(pol, [0.3, -0.5]) == pytest.approx(0.5)
    with pytest.raises(UsageError):
        body_from_spec({"kind": "image", "matrix": [[1]], "base": "nope"}, reg)
    with pytest.raises(UsageError):
        body_from_spec({"kind": "teapot"})


# --- properties -------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.sampled_from(P_VALUES), vec(3), st.floats(-10, 10).filter(lambda t: abs(t) > 1e-3))
def test_homogeneity_and_symmetry(p, x, t):
    k = make_lp_ball(3, p, weights=[0.5, 1, 2])
    nx = minkowski(k, x)
    assert minkowski(k, t * x) == pytest.approx(abs(t) * nx, rel=1e-12, abs=1e-12)
    assert minkowski(k, -x) == pytest.approx(nx, rel=1e-14, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(P_VALUES), vec(3), vec(3))
def test_triangle_inequality_for_convex(p, x, y):
    k = make_lp_ball(3, p)
    assert minkowski(k, x + y) <= minkowski(k, x) + minkowski(k, y) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(P_VALUES), vec(4), st.lists(st.sampled_from([-1.0, 1.0]), min_size=4, max_size=4))
def test_sign_invariance(p, x, signs):
    k = make_lp_ball(4, p, weights=[1, 2, 3, 4])
    assert minkowski(k, x * np.array(signs)) == pytest.approx(minkowski(k, x), rel=1e-14, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(P_VALUES), vec(3).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_radial_times_gauge_is_one(p, x):
    k = make_lp_ball(3, p, weights=[0.7, 1.3, 2])
    theta = x / np.linalg.norm(x)
    assert radial(k, theta) * minkowski(k, theta) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1, 1.5, 2, 3, "inf"]), vec(3))
def test_polar_of_polar(p, x):
    k = make_lp_ball(3, p, weights=[0.5, 1, 2])
    assert minkowski(polar(polar(k)), x) == pytest.approx(minkowski(k, x), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.2, 3), min_size=4, max_size=4), st.lists(st.floats(0.2, 3), min_size=4, max_size=4),
       vec(2))
def test_linear_image_composition(a, b, x):
    k = make_lp_ball(2, 1.5)
    ma = np.array(a).reshape(2, 2) + 2 * np.eye(2)
    mb = np.array(b).reshape(2, 2) + 2 * np.eye(2)
    lhs = minkowski(linear_image(linear_image(k, mb), ma), x)
    rhs = minkowski(linear_image(k, ma @ mb), x)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)
