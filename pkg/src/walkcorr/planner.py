"""Bound constants, certified bounds, parameter selection and query prediction.

All bound arithmetic runs in log space; values too large for a float come
back as ``inf`` rather than overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .bessel import SegmentSpec, bessel_tail_bound, default_r, select_z, tail_sum
from .errors import InfeasiblePlanError, ParameterError

LOG2 = math.log(2.0)
MAX_M = 64
QUERIES_PER_STEP = 4

UNCORRECTED = "uncorrected"
CORRECTED1 = "corrected1"
CORRECTED2 = "corrected2"
ALGORITHMS = (UNCORRECTED, CORRECTED1, CORRECTED2)


def _bisect(f, lo: float, hi: float, iters: int = 200) -> float:
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _newton_polish(f, df, x: float, steps: int = 3) -> float:
    for _ in range(steps):
        d = df(x)
        if d == 0:
            break
        x_new = x - f(x) / d
        if abs(x_new - x) > 1e-6:
            break
        x = x_new
    return x


def zeta_equation(zeta: float) -> float:
    """Residual of ``exp(1 + 1/(2 zeta)) = 2 zeta``."""
    return math.exp(1.0 + 1.0 / (2.0 * zeta)) - 2.0 * zeta


def zeta_prime_equation(zp: float) -> float:
    """Residual of ``zp^5 (sqrt2 - 2 zp)^2 = 16 sqrt2``."""
    return zp ** 5 * (math.sqrt(2.0) - 2.0 * zp) ** 2 - 16.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class BoundConstants:
    zeta: float
    zeta_prime: float

    @property
    def residuals(self) -> tuple[float, float]:
        return abs(zeta_equation(self.zeta)), abs(zeta_prime_equation(self.zeta_prime))


@lru_cache(maxsize=None)
def solve_constants() -> BoundConstants:
    zeta = _bisect(zeta_equation, 1.5, 2.2)
    zeta = _newton_polish(
        zeta_equation,
        lambda x: -math.exp(1.0 + 1.0 / (2.0 * x)) / (2.0 * x * x) - 2.0,
        zeta,
    )
    s2 = math.sqrt(2.0)
    zp = _bisect(zeta_prime_equation, 1.4, 1.6)
    zp = _newton_polish(
        zeta_prime_equation,
        lambda x: 5 * x ** 4 * (s2 - 2 * x) ** 2 - 4 * x ** 5 * (s2 - 2 * x),
        zp,
    )
    return BoundConstants(zeta=zeta, zeta_prime=zp)


def _exp(logv: float) -> float:
    if logv > 709.0:
        return math.inf
    return math.exp(logv)


def _log_base(z: float, M: int, extra: float = 1.0) -> float:
    """``log(|z| zeta extra / M)``; ``-inf`` for ``z = 0``."""
    if z == 0:
        return -math.inf
    return math.log(abs(z) * solve_constants().zeta * extra / M)


@dataclass(frozen=True)
class CertifiedBounds:
    lemma2_s: float
    lemma4_tail: float
    lemma6_s: float | None = None
    lemma7_tail: float | None = None

    def as_dict(self) -> dict:
        return {
            "lemma2_s": self.lemma2_s,
            "lemma4_tail": self.lemma4_tail,
            "lemma6_s": self.lemma6_s,
            "lemma7_tail": self.lemma7_tail,
        }


def _inv_power(base: float, n: int) -> float:
    """``base^{-n}`` for ``0 < base <= 1``."""
    if n == 0:
        return 1.0
    return _exp(-n * math.log(base))


def lemma_bounds(spec: SegmentSpec, N: int, N_prime: int | None = None) -> CertifiedBounds:
    """Evaluate the s-sum and tail bounds for a parameter choice."""
    z, M, r = spec.z, spec.M, spec.r
    tail = tail_sum(z, M)
    if 1.0 - 2.0 * tail <= 0.0:
        raise InfeasiblePlanError(f"1 - 2*tail_sum = {1 - 2 * tail:.3g} <= 0 at z={z}, M={M}")
    lemma2 = _inv_power(1.0 - 2.0 * tail, r)
    lemma4 = _exp((r + 1) * LOG2 + (N + 1) * _log_base(z, M)) if z else 0.0
    lemma6 = lemma7 = None
    if spec.r_prime is not None:
        rp = spec.r_prime
        if 1.0 - 2.0 * lemma4 <= 0.0:
            lemma6 = math.inf
        else:
            lemma6 = _inv_power(1.0 - 2.0 * lemma4, rp)
        if N_prime is None:
            raise ParameterError("two-round bounds need N_prime")
        zp = solve_constants().zeta_prime
        lemma7 = (_exp(rp * LOG2 + (N_prime + 1) * _log_base(z, M, zp * 2.0 ** (1.0 / M)))
                  if z else 0.0)
    return CertifiedBounds(lemma2, lemma4, lemma6, lemma7)


@dataclass(frozen=True)
class SegmentPlan:
    spec: SegmentSpec
    N: int
    algorithm: str = CORRECTED1
    N_prime: int | None = None
    certified: CertifiedBounds | None = None
    predicted_error: float = 0.0
    predicted_queries: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def trivial(self) -> bool:
        return self.spec.trivial

    def summary(self) -> dict:
        s = self.spec
        return {
            "algorithm": self.algorithm,
            "tau": s.tau,
            "z": s.z,
            "M": s.M,
            "r": s.r,
            "N": self.N,
            "r_prime": s.r_prime,
            "N_prime": self.N_prime,
            "trivial": s.trivial,
            "certified": self.certified.as_dict() if self.certified else None,
            "predicted_error": self.predicted_error,
            "predicted_walk_steps": predicted_walk_steps(self),
            "predicted_queries": self.predicted_queries,
        }


def predicted_walk_steps(plan: SegmentPlan) -> int:
    """Walk steps of the full circuit under the ladder/OAA cost convention.

    A segment LCU costs ``2M``; one OAA step triples what it wraps.
    """
    if plan.trivial:
        return 0
    s = plan.spec
    segments = s.r * 3 * 2 * s.M
    if plan.algorithm == UNCORRECTED:
        return segments
    compound = 3 * (segments + 2 * plan.N)
    if plan.algorithm == CORRECTED1:
        return compound
    return 3 * (s.r_prime * compound + 2 * plan.N_prime)


def predicted_queries(plan: SegmentPlan) -> int:
    return QUERIES_PER_STEP * predicted_walk_steps(plan)


def _finish(plan: SegmentPlan) -> SegmentPlan:
    return replace(plan, predicted_queries=predicted_queries(plan))


def _check_inputs(tau: float, epsilon: float) -> None:
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if tau < 0 or not math.isfinite(tau):
        raise ParameterError(f"tau must be finite and >= 0, got {tau}")


def segment_cap_ok(spec: SegmentSpec) -> bool:
    """``r <= log2 / (2 tail)`` and the resulting s-bound stays within 2."""
    tail = tail_sum(spec.z, spec.M)
    if tail == 0.0:
        return True
    if spec.r > LOG2 / (2.0 * tail):
        return False
    return 1.0 - 2.0 * tail > 0 and _inv_power(1.0 - 2.0 * tail, spec.r) <= 2.0


def compound_cap(spec: SegmentSpec) -> float:
    """Largest admissible ``r'``: ``(log2 / 2^{r+2}) (M / (|z| zeta))^{3rM+1}``."""
    if spec.z == 0:
        return math.inf
    logv = math.log(LOG2) - (spec.r + 2) * LOG2 - (3 * spec.r * spec.M + 1) * _log_base(spec.z, spec.M)
    return _exp(logv)


def _trivial_plan(tau: float, algorithm: str, rounds: int) -> SegmentPlan:
    spec = select_z(0.0, rounds)
    N = 3 * spec.r * spec.M
    Np = 9 * spec.r * spec.r_prime * spec.M if rounds == 2 else None
    bounds = CertifiedBounds(1.0, 0.0, 1.0 if rounds == 2 else None, 0.0 if rounds == 2 else None)
    return _finish(SegmentPlan(spec=spec, N=N, algorithm=algorithm, N_prime=Np,
                               certified=bounds, predicted_error=0.0))


def plan_single(tau: float, epsilon: float) -> SegmentPlan:
    """Parameters for one round of correction."""
    _check_inputs(tau, epsilon)
    if tau == 0:
        return _trivial_plan(tau, CORRECTED1, 1)
    base = select_z(tau, 1)
    for M in range(2, MAX_M + 1):
        spec = replace(base, M=M)
        if not segment_cap_ok(spec):
            continue
        N = 3 * spec.r * M
        bounds = lemma_bounds(spec, N)
        if bounds.lemma4_tail <= epsilon:
            return _finish(SegmentPlan(spec=spec, N=N, algorithm=CORRECTED1,
                                       certified=bounds, predicted_error=bounds.lemma4_tail))
    raise InfeasiblePlanError(f"no single-round plan with M <= {MAX_M} for tau={tau}, eps={epsilon}")


def plan_double(tau: float, epsilon: float, r: int | None = None) -> SegmentPlan:
    """Parameters for two rounds of correction."""
    _check_inputs(tau, epsilon)
    if tau == 0:
        return _trivial_plan(tau, CORRECTED2, 2)
    r = default_r(tau) if r is None else r
    base = select_z(tau, 2, r_hint=r)
    for M in range(2, MAX_M + 1):
        spec = replace(base, M=M)
        if not segment_cap_ok(spec):
            continue
        if spec.r_prime > compound_cap(spec):
            continue
        N = 3 * spec.r * M
        Np = 9 * spec.r * spec.r_prime * M
        bounds = lemma_bounds(spec, N, Np)
        if bounds.lemma6_s > 2.0 or bounds.lemma7_tail > epsilon:
            continue
        return _finish(SegmentPlan(spec=spec, N=N, algorithm=CORRECTED2, N_prime=Np,
                                   certified=bounds, predicted_error=bounds.lemma7_tail))
    raise InfeasiblePlanError(f"no two-round plan with M <= {MAX_M} for tau={tau}, eps={epsilon}")


def plan_uncorrected(tau: float, epsilon: float) -> SegmentPlan:
    """Baseline without correction: per-segment factorial tail bound at ``epsilon / r``."""
    _check_inputs(tau, epsilon)
    if tau == 0:
        return _trivial_plan(tau, UNCORRECTED, 1)
    base = select_z(tau, 1)
    target = epsilon / base.r
    for M in range(2, MAX_M + 1):
        if bessel_tail_bound(base.z, M) <= target:
            spec = replace(base, M=M)
            err = base.r * bessel_tail_bound(base.z, M)
            return _finish(SegmentPlan(spec=spec, N=0, algorithm=UNCORRECTED,
                                       predicted_error=err))
    raise InfeasiblePlanError(f"no uncorrected plan with M <= {MAX_M}")


def make_plan(algorithm: str, tau: float, epsilon: float) -> SegmentPlan:
    if algorithm == UNCORRECTED:
        return plan_uncorrected(tau, epsilon)
    if algorithm == CORRECTED1:
        return plan_single(tau, epsilon)
    if algorithm == CORRECTED2:
        return plan_double(tau, epsilon)
    raise ParameterError(f"unknown algorithm {algorithm!r}")


def verify_plan(plan: SegmentPlan, epsilon: float) -> list[str]:
    """Recompute the certified bounds; return the list of violated invariants."""
    bad = []
    s = plan.spec
    if plan.trivial:
        return bad
    if plan.algorithm == UNCORRECTED:
        if plan.predicted_error > epsilon * (1 + 1e-12):
            bad.append("predicted_error > epsilon")
        return bad
    if plan.N != 3 * s.r * s.M:
        bad.append("N != 3rM")
    b = lemma_bounds(s, plan.N, plan.N_prime)
    if b.lemma2_s > 2.0:
        bad.append("lemma2_s > 2")
    if plan.algorithm == CORRECTED1 and b.lemma4_tail > epsilon:
        bad.append("lemma4_tail > epsilon")
    if plan.algorithm == CORRECTED2:
        if plan.N_prime != 9 * s.r * s.r_prime * s.M:
            bad.append("N' != 9rr'M")
        if b.lemma6_s > 2.0:
            bad.append("lemma6_s > 2")
        if b.lemma7_tail > epsilon:
            bad.append("lemma7_tail > epsilon")
    if plan.predicted_error > epsilon:
        bad.append("predicted_error > epsilon")
    return bad
