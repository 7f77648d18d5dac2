import math

import pytest

from hypslice import UsageError, ball_volume, c_n, general_constant, lp_ball_volume, stability_coefficient
from hypslice.constants import sphere_area, unconditional_proof_constant


def test_ball_volumes():
    assert ball_volume(0) == 1.0
    assert ball_volume(1) == pytest.approx(2.0)
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_c2():
    assert c_n(2) == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-12)


def test_c_n_limit():
    # c_n -> 1/sqrt(e) slowly from below
    assert c_n(10_000) == pytest.approx(1 / math.sqrt(math.e), rel=2e-3)
    assert c_n(10_000) < 1


def test_c_n_domain():
    with pytest.raises(UsageError):
        c_n(1)


def test_derived_constants():
    for n in (2, 5, 9):
        assert stability_coefficient(n) == pytest.approx(n / (n - 1) * c_n(n))
        assert general_constant(n) == pytest.approx(math.sqrt(n) * stability_coefficient(n))


def test_lp_volume_special_cases():
    assert lp_ball_volume(3, 1) == pytest.approx(4 / 3)
    assert lp_ball_volume(2, 2) == pytest.approx(math.pi)
    assert lp_ball_volume(4, math.inf) == 16


def test_proof_constants():
    for n in range(2, 60):
        corrected = unconditional_proof_constant(n)
        coarse = unconditional_proof_constant(n, corrected=False)
        assert corrected < math.e
        assert coarse < corrected
    assert unconditional_proof_constant(5000) == pytest.approx(math.sqrt(math.e), rel=2e-3)
    assert unconditional_proof_constant(5000, corrected=False) == pytest.approx(math.sqrt(math.e) / 2, rel=2e-3)
