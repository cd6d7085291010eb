import math

import pytest

from walkcorr import planner
from walkcorr.bessel import SegmentSpec, tail_sum
from walkcorr.errors import InfeasiblePlanError, ParameterError
from walkcorr.planner import (
    lemma_bounds,
    make_plan,
    plan_double,
    plan_single,
    plan_uncorrected,
    predicted_queries,
    predicted_walk_steps,
    solve_constants,
    verify_plan,
)
from walkcorr.verify import _lambert_w, scaling_table, single_growth_limit


def test_constants():
    c = solve_constants()
    assert 1.5 < c.zeta < 2.2 and 1.4 < c.zeta_prime < 1.6
    assert c.zeta == pytest.approx(1.7955, abs=1e-4)
    assert round(c.zeta_prime, 5) == 1.52937
    r1, r2 = c.residuals
    assert abs(r1) <= 1e-12 and abs(r2) <= 1e-12
    assert math.exp(1 + 1 / (2 * c.zeta)) == pytest.approx(2 * c.zeta, rel=1e-14)


def test_zeta_lambert_w():
    w = _lambert_w(1 / math.e)
    assert w * math.exp(w) == pytest.approx(1 / math.e, rel=1e-14)
    assert abs(solve_constants().zeta - 1 / (2 * w)) <= 1e-9


def test_lemma_bounds_examples():
    b = lemma_bounds(SegmentSpec(z=0.0, M=2, r=1, r_prime=1), 6, 18)
    assert (b.lemma2_s, b.lemma4_tail, b.lemma6_s, b.lemma7_tail) == (1.0, 0.0, 1.0, 0.0)
    zeta = solve_constants().zeta
    b = lemma_bounds(SegmentSpec(z=-0.8, M=2, r=3), 18)
    assert b.lemma4_tail == pytest.approx(2 ** 4 * (0.8 * zeta / 2) ** 19, rel=1e-12)
    assert b.lemma2_s == pytest.approx((1 - 2 * tail_sum(-0.8, 2)) ** -3, rel=1e-14)
    assert b.lemma6_s is None
    with pytest.raises(ParameterError):
        lemma_bounds(SegmentSpec(z=-0.8, M=2, r=3, r_prime=2), 18)


def test_lemma_bounds_log_space():
    b = lemma_bounds(SegmentSpec(z=-1.0, M=40, r=60, r_prime=50), 7200, 1_080_000)
    assert b.lemma4_tail == 0.0 or b.lemma4_tail < 1e-300
    assert math.isfinite(b.lemma2_s)


def test_lemma_bounds_infeasible():
    with pytest.raises(InfeasiblePlanError):
        lemma_bounds(SegmentSpec(z=-5.0, M=2, r=1), 6)


def test_plan_single_examples():
    p = plan_single(0.0, 0.1)
    assert p.trivial and predicted_queries(p) == 0
    p = plan_single(4.0, 1e-3)
    assert p.certified.lemma2_s <= 2 and p.certified.lemma4_tail <= 1e-3
    assert p.N == 3 * p.spec.r * p.spec.M
    assert verify_plan(p, 1e-3) == []
    assert plan_single(4.0, 1e-12).N >= plan_single(4.0, 1e-3).N
    for eps in (0.0, 1.0, -1e-3):
        with pytest.raises(ParameterError):
            plan_single(4.0, eps)


def test_plan_double_examples():
    p = plan_double(2.0, 0.5)
    assert verify_plan(p, 0.5) == []
    assert p.spec.r_prime <= 3
    p = plan_double(16.0, 1e-6)
    assert p.spec.r == 4 and p.certified.lemma6_s <= 2
    assert p.N_prime == 9 * p.spec.r * p.spec.r_prime * p.spec.M
    for tau in (2.0, 3.3, 8.0, 16.0, 31.0):
        s = plan_double(tau, 1e-6).spec
        assert s.z * s.r * s.r_prime == pytest.approx(-tau, rel=1e-15)


def test_infeasible_guard(monkeypatch):
    monkeypatch.setattr(planner, "MAX_M", 2)
    with pytest.raises(InfeasiblePlanError):
        plan_single(8.0, 1e-12)
    with pytest.raises(InfeasiblePlanError):
        plan_double(16.0, 1e-12)


def test_predicted_queries_examples():
    spec = SegmentSpec(z=-0.8, M=2, r=3)
    p = planner.SegmentPlan(spec=spec, N=18)
    assert predicted_walk_steps(p) == 216 and predicted_queries(p) == 864
    assert predicted_queries(plan_double(0.0, 0.1)) == 0
    p = plan_double(8.0, 1e-8)
    s = p.spec
    assert predicted_walk_steps(p) == 3 * (s.r_prime * 3 * (s.r * 3 * 2 * s.M + 2 * p.N) + 2 * p.N_prime)


def test_uncorrected_plan():
    p = plan_uncorrected(8.0, 1e-8)
    assert p.predicted_error <= 1e-8
    assert predicted_walk_steps(p) == p.spec.r * 3 * 2 * p.spec.M
    with pytest.raises(ParameterError):
        make_plan("bogus", 1.0, 0.1)


@pytest.mark.parametrize("alg", planner.ALGORITHMS)
def test_every_plan_recertifies(alg):
    for tau in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0):
        for eps in (1e-2, 1e-4, 1e-8, 1e-12):
            p = make_plan(alg, tau, eps)
            assert verify_plan(p, eps) == []
            assert p.predicted_error <= eps


def test_single_round_growth():
    for tau, m1, _ in scaling_table():
        assert m1 <= single_growth_limit(tau)


def test_double_round_cutoff_not_above_single_round():
    for tau, m1, m2 in scaling_table():
        assert m2 <= m1, f"tau={tau}: double-round M={m2} > single-round M={m1}"
