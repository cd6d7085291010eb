import math

import numpy as np
import pytest
from scipy.special import jv

from walkcorr.bessel import (
    SegmentSpec,
    abs_bessel_sum,
    bessel_j,
    bessel_tail_bound,
    full_cutoff,
    full_series,
    segment_series,
    select_z,
    tail_sum,
    z_cap,
)
from walkcorr.errors import DomainError, ParameterError
from walkcorr.series import check_alternating_symmetry, s_norm


def ascending_series(m, z, terms=80):
    """Independent oracle: sum_k (-1)^k (z/2)^{m+2k} / (k! (m+k)!)."""
    sign = 1.0
    if m < 0:
        m, sign = -m, (-1.0) ** m
    total = math.fsum((-1) ** k * math.exp((m + 2 * k) * math.log(abs(z) / 2) - math.lgamma(k + 1)
                                           - math.lgamma(m + k + 1)) * (1 if z > 0 or m % 2 == 0 else -1)
                      for k in range(terms)) if z else float(m == 0)
    return sign * total


def test_small_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(5, 0.0) == 0.0
    assert bessel_j(1, 1.0) == pytest.approx(0.4400505857, abs=1e-10)
    assert bessel_j(-3, 2.0) == pytest.approx(-0.1289432, abs=1e-7)
    assert bessel_j(-3, 2.0) == -bessel_j(3, 2.0)


def test_matches_ascending_series_oracle():
    for z in (-3.0, -1.0, 0.4, 1.7, 2.5, 4.0):
        for m in range(-12, 13):
            assert abs(bessel_j(m, z) - ascending_series(m, z)) <= 1e-13


def test_matches_scipy_reference():
    worst = 0.0
    for x in np.linspace(-50, 50, 41):
        for m in range(0, 201, 7):
            worst = max(worst, abs(bessel_j(m, x) - jv(m, x)))
    assert worst <= 1e-13


def test_parity_exact():
    for z in (-17.3, -2.0, -0.4, 0.9, 3.3, 41.0):
        for m in range(60):
            assert bessel_j(-m, z) == (-1) ** m * bessel_j(m, z)
            assert bessel_j(m, -z) == (-1) ** m * bessel_j(m, z)


def test_normalisation():
    for z in np.linspace(-5, 5, 11):
        F = full_series(z, 1e-18)
        assert abs(np.sum(np.abs(F.coeffs) ** 2) - 1) <= 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(0, 2e3)
    with pytest.raises(DomainError):
        bessel_j(0, float("nan"))


def test_segment_series_examples():
    assert segment_series(0.0, 4) == segment_series(0.0, 0)
    assert segment_series(0.0, 3)[0] == 1
    F = segment_series(-1.0, 2)
    expect = {0: 0.76520, -1: 0.44005, 1: -0.44005, 2: 0.11490, -2: 0.11490}
    for m, v in expect.items():
        assert F[m].real == pytest.approx(v, abs=1e-5)
    assert check_alternating_symmetry(F)
    assert s_norm(segment_series(-z_cap(), 10)) <= 2.0


def test_full_series_examples():
    assert full_series(0.0) == segment_series(0.0, 0)
    M = full_cutoff(-1.0, 1e-16)
    assert M <= 20
    assert tail_sum(-1.0, M) <= 1e-16


def test_tail_sum_examples():
    assert tail_sum(0.0, 3) == 0.0
    assert tail_sum(-1.0, 2) == pytest.approx(0.0446, abs=1e-4)
    oracle = 2 * sum(abs(ascending_series(m, 1.0)) for m in range(3, 40))
    assert tail_sum(-1.0, 2) == pytest.approx(oracle, rel=1e-12)
    for z in (-0.2, -0.8, -1.1, -3.0, -7.0):
        for M in range(0, 20):
            assert tail_sum(z, M) <= bessel_tail_bound(z, M)


def test_tail_bound_examples():
    assert bessel_tail_bound(-1.0, 2) == pytest.approx(4 * 0.5 ** 3 / 6, rel=1e-14)
    assert bessel_tail_bound(0.0, 5) == 0.0
    for z in (0.5, 1.0, 3.0):
        vals = [bessel_tail_bound(z, M) for M in range(math.ceil(z), 40)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    assert math.isfinite(bessel_tail_bound(-900.0, 10)) or bessel_tail_bound(-900.0, 10) == math.inf


def test_z_cap_bracket():
    cap = z_cap()
    assert 1.0 < cap < 1.2
    assert abs_bessel_sum(1.0) == pytest.approx(1.919, abs=1e-3)
    assert abs_bessel_sum(cap) <= 2.0 < abs_bessel_sum(cap + 1e-9)


def test_select_z_examples():
    spec = select_z(0.0, 1)
    assert spec.z == 0 and spec.r == 1 and spec.trivial
    spec = select_z(2.2, 1)
    assert spec.r == 2 and spec.z == pytest.approx(-1.1)
    spec = select_z(16.0, 2)
    assert spec.r == 4 and spec.r_prime == 4 and spec.z == -1.0


def test_select_z_contract():
    for tau in (0.3, 1.0, 2.2, 5.5, 9.0, 16.0, 33.3):
        for rounds in (1, 2):
            spec = select_z(tau, rounds)
            reps = spec.r * (spec.r_prime or 1)
            assert spec.z * reps == pytest.approx(-tau, rel=1e-15)
            assert abs(spec.z) <= z_cap()
            for M in range(0, 15):
                assert s_norm(segment_series(spec.z, M)) <= 2.0
    with pytest.raises(ParameterError):
        select_z(-1.0)


def test_segment_spec_invariants():
    with pytest.raises(ParameterError):
        SegmentSpec(z=0.5)
    with pytest.raises(ParameterError):
        SegmentSpec(z=-0.5, M=1)
    with pytest.raises(ParameterError):
        SegmentSpec(z=-0.5, r=0)
    assert SegmentSpec.from_tau(6.0, 3, 2, 3).z == -1.0
