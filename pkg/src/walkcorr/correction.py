"""Series-level algorithm objects: OAA output, the defect ``W`` and corrections.

Conventions: ``Delta := V - Vt`` in the first round and
``Delta' := V' - Vt' = (V_C - Vt_C) V_oaa^r`` in the second.  All bounds are
on the s-functional, so the sign choice does not affect any of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bessel import full_series
from .errors import ConsistencyError, DivergenceError, DomainError
from .series import (
    LaurentSeries,
    adjoint,
    combine,
    mul,
    power,
    s_norm,
    truncate,
)

EXACT_TOL = 1e-16
# s-mass dropped from each intermediate power of W; far below EXACT_TOL
_POWER_TRIM = 1e-22
MAX_TERMS = 10_000


@dataclass
class CorrectionResult:
    """A correction series, its truncation and bookkeeping.

    ``residual`` is ``None`` until a defining-identity check has run.
    """

    series: LaurentSeries
    truncated: LaurentSeries
    s_total: float
    s_tail: float
    k_terms: int
    r: int
    cutoff: int | None = None
    residual: float | None = None


def oaa_series(F: LaurentSeries) -> LaurentSeries:
    """Effective operation after one OAA step with ``s`` padded to 2."""
    return combine(1.5, F, -0.5, mul(mul(F, adjoint(F)), F))


def w_first(V: LaurentSeries, Vt: LaurentSeries) -> LaurentSeries:
    """Defect ``W`` with ``V^dag V_oaa = 1 - W``, short form.

    ``W = (V^dag D - D^dag Vt + V^dag D V^dag D + V^dag D D^dag Vt) / 2``
    with ``D = V - Vt``.
    """
    D = V - Vt
    Vd = adjoint(V)
    Dd = adjoint(D)
    VdD = mul(Vd, D)
    terms = (
        VdD
        - mul(Dd, Vt)
        + mul(VdD, VdD)
        + mul(mul(VdD, Dd), Vt)
    )
    return 0.5 * terms


def w_first_expanded(Vt: LaurentSeries, D: LaurentSeries) -> LaurentSeries:
    """Same ``W`` written only in terms of ``Vt`` and ``D`` (uses ``V^dag V = 1``)."""
    Vtd = adjoint(Vt)
    Dd = adjoint(D)
    D2 = mul(D, D)
    Dd2 = mul(Dd, Dd)
    terms = (
        mul(Vtd, D)
        - mul(Dd, Vt)
        + mul(Dd, D)
        + mul(mul(Vtd, Vtd), D2)
        + mul(Dd2, D2)
        + 2.0 * mul(mul(Vtd, Dd), D2)
        + mul(mul(Vtd, Vt), mul(D, Dd))
        + mul(mul(Vt, D), Dd2)
    )
    return 0.5 * terms


def _binomial_sum(W: LaurentSeries, r: int, tol: float) -> tuple[LaurentSeries, int]:
    """``sum_k C(r+k-1, r-1) W^k`` truncated by a rigorous remainder bound."""
    if r < 1:
        raise DomainError("r must be >= 1")
    s = s_norm(W)
    if s >= 1.0:
        raise DivergenceError(f"s(W) = {s:.6g} >= 1; the correction series diverges")
    total = LaurentSeries.one()
    if s == 0.0:
        return total, 0
    P = LaurentSeries.one()
    K = 0
    while True:
        # remainder after K: sum_{k>K} C(r+k-1, r-1) s^k; successive ratios
        # (r+k)/(k+1) * s are non-increasing in k, so a geometric tail bounds it
        ratio = s * (r + K + 1) / (K + 2)
        if ratio < 1.0:
            log_next = math.log(math.comb(r + K, r - 1)) + (K + 1) * math.log(s)
            if log_next - math.log1p(-ratio) <= math.log(tol):
                break
        K += 1
        if K > MAX_TERMS:
            raise DivergenceError("correction series did not reach tolerance")
        P = mul(P, W).trim(_POWER_TRIM)
        total = combine(1.0, total, math.comb(r + K - 1, r - 1), P)
    return total, K


def correction_first(W: LaurentSeries, r: int, tol: float = EXACT_TOL,
                     cutoff: int | None = None) -> CorrectionResult:
    """``V_C = (1 - W)^{-r}`` as a binomial series, optionally truncated at ``cutoff``."""
    series, K = _binomial_sum(W, r, tol)
    series = series.trim(tol * 1e-2)
    truncated = series if cutoff is None else truncate(series, cutoff)
    s_total = s_norm(series)
    return CorrectionResult(
        series=series,
        truncated=truncated,
        s_total=s_total,
        s_tail=max(0.0, s_total - s_norm(truncated)),
        k_terms=K,
        r=r,
        cutoff=cutoff,
    )


def segment_power(Vt: LaurentSeries, r: int) -> LaurentSeries:
    """``V_oaa^r`` for the segment series ``Vt``."""
    return power(oaa_series(Vt), r)


def verify_first(Vt: LaurentSeries, result: CorrectionResult, r: int, z: float) -> float:
    """s-norm of ``V_C V_oaa^r - V(z r)``; stored on ``result.residual``."""
    lhs = mul(result.series, segment_power(Vt, r))
    residual = s_norm(lhs - full_series(z * r, EXACT_TOL))
    result.residual = residual
    return residual


def oaa_gram(Vt: LaurentSeries, D: LaurentSeries) -> LaurentSeries:
    """``V_oaa^dag V_oaa`` expanded in ``Vt`` and ``D`` (valid when ``V^dag V = 1``)."""
    Vtd = adjoint(Vt)
    Dd = adjoint(D)
    p = mul(Dd, D)
    x = mul(Vtd, D)
    y = mul(Dd, Vt)
    p2 = mul(p, p)
    out = (
        LaurentSeries.one()
        - 1.5 * p
        + 0.75 * p2
        - 0.25 * mul(p2, p)
        - 0.75 * (mul(x, x) + mul(y, y))
        - 0.25 * (mul(mul(x, x), x) + mul(mul(y, y), y))
        - 0.75 * mul(p, y + x)
    )
    return out


@dataclass
class SecondRoundChain:
    Vp: LaurentSeries
    Vtp: LaurentSeries
    Dp: LaurentSeries
    Wp: LaurentSeries
    route_gap: float


def second_round_chain(vc: CorrectionResult, Vt: LaurentSeries, r: int,
                       V: LaurentSeries | None = None,
                       check_tol: float = 1e-12) -> SecondRoundChain:
    """Build ``V'``, ``Vt'``, ``Delta'`` and ``W'`` for the second round.

    ``W'`` is computed twice: from the generic short form applied to the
    primed operators, and from the rewrite through ``(V_oaa^dag V_oaa)^r`` with
    the expanded Gram series.  A gap above ``check_tol`` raises.
    ``V`` (the exact segment series) is needed for the expanded Gram series;
    it defaults to the segment's own cutoff being extended by ``full_series``.
    """
    Voaa_r = segment_power(Vt, r)
    Vp = mul(vc.series, Voaa_r)
    Vtp = mul(vc.truncated, Voaa_r)
    Dc = vc.series - vc.truncated
    Dp = mul(Dc, Voaa_r)
    Wp = w_first(Vp, Vtp)

    if V is None:
        raise DomainError("second_round_chain needs the exact segment series V")
    gram = oaa_gram(Vt, V - Vt)
    Q = power(gram, r)
    Vcd = adjoint(vc.series)
    VcdDc = mul(Vcd, Dc)
    first = VcdDc - mul(adjoint(Dc), vc.truncated)
    second = mul(VcdDc, VcdDc) + mul(mul(VcdDc, adjoint(Dc)), vc.truncated)
    Wp_alt = 0.5 * mul(Q, first) + 0.5 * mul(mul(Q, Q), second)
    gap = s_norm(Wp - Wp_alt)
    if gap > check_tol:
        raise ConsistencyError(f"W' routes disagree: s-gap {gap:.3e}")
    return SecondRoundChain(Vp=Vp, Vtp=Vtp, Dp=Dp, Wp=Wp, route_gap=gap)


def correction_second(Wp: LaurentSeries, r_prime: int, tol: float = EXACT_TOL,
                      cutoff: int | None = None) -> CorrectionResult:
    """``V_C' = (1 - W')^{-r'}``; same summation scheme as the first round."""
    return correction_first(Wp, r_prime, tol, cutoff)


def verify_second(Vtp: LaurentSeries, result: CorrectionResult, r_prime: int, z: float,
                  r: int) -> float:
    """s-norm of ``V_C' (V_oaa')^{r'} - V(z r r')`` with ``V_oaa' = oaa(Vt')``."""
    lhs = mul(result.series, power(oaa_series(Vtp), r_prime))
    residual = s_norm(lhs - full_series(z * r * r_prime, EXACT_TOL))
    result.residual = residual
    return residual
