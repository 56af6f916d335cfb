import math

import pytest

import ahelab


def test_indicial_radius():
    r, flag = ahelab.indicial_radius(ahelab.OperatorSpec.lichnerowicz(4, 8))
    assert r == pytest.approx(2.0)
    assert not flag
    r, flag = ahelab.indicial_radius(ahelab.OperatorSpec.hodge(3, 2))
    assert r == 0.5 and flag
    assert ahelab.indicial_radius(ahelab.OperatorSpec.lichnerowicz(4, 0))[0] is None
    assert ahelab.fredholm_window(ahelab.OperatorSpec.lichnerowicz(4, 8)) == (0.0, 4.0)


def test_errors_carry_codes():
    with pytest.raises(ahelab.AhelabError) as info:
        ahelab.indicial_radius(ahelab.OperatorSpec.hodge(3, 9))
    assert info.value.code == "InvalidSpec"
    assert not info.value.numeric
    with pytest.raises(ahelab.AhelabError) as info:
        ahelab.einstein_solve("berger:1.05", M=48, max_iters=1)
    assert info.value.code == "NoConvergence"
    assert info.value.numeric


def test_green_slope():
    d = [0.1 + 19.9 * i / 599 for i in range(600)]
    prof = ahelab.green_profile(3, 0.0, d)
    assert abs(ahelab.decay_slope(prof) - 3.0) < 0.06
    h3 = ahelab.green_profile(2, 0.0, [0.1 + 9.9 * i / 99 for i in range(100)])
    assert h3(2.0) == pytest.approx((1 / math.tanh(2.0) - 1) / (4 * math.pi), rel=1e-6)


def test_membership_and_distance():
    assert ahelab.hyperbolic_distance([0.5, 0.0, 0.0], [0.0, 0.0, 0.0]) == pytest.approx(math.acosh(5 / 3))
    m = ahelab.lp_membership(2.0, 0.0, 2.0)
    assert m["analytic"] and m["numeric"]


def test_spectrum_bottom():
    b = ahelab.spectrum_bottom(ahelab.OperatorSpec.scalar(3), D=40.0, N=2048)
    assert abs(b - 2.25) / 2.25 < 0.01


def test_einstein_solve():
    out = ahelab.einstein_solve("berger:1.05")
    assert out["converged"]
    assert out["residual"] < 1e-8
    assert out["fd_defect"] < 1e-6
    rnd = ahelab.einstein_solve("round:1", noise=1e-2, max_iters=10)
    assert rnd["weighted_correction"] < 1e-8
    assert ahelab.linearization_error("round:1") < 1e-5


def test_hypotheses():
    assert ahelab.hypothesis_check(-1.0, "neg", 3) == "SatisfiesA"
    assert ahelab.hypothesis_check(0.1, "pos", 9) == "SatisfiesB"
