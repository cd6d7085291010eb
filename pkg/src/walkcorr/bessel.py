"""Integer-order Bessel functions and the segment series built from them.

``J_m(x)`` for real ``x`` is evaluated with the ascending power series when
``|x| <= 2`` and with Miller's normalised downward recurrence otherwise.
Negative orders and arguments are reduced with ``J_{-m}(x) = (-1)^m J_m(x)``
and ``J_m(-x) = (-1)^m J_m(x)``, so the parity identities hold bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ParameterError
from .series import LaurentSeries

MAX_ABS_Z = 1e3
SERIES_SWITCH = 2.0
_RESCALE = 1e250


def _parity(m: int) -> float:
    return -1.0 if m % 2 else 1.0


def _power_series_range(mmax: int, x: float) -> np.ndarray:
    """J_0..J_mmax(x) for 0 <= x <= 2 from the ascending series."""
    out = np.zeros(mmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    h = 0.5 * x
    logh = math.log(h)
    h2 = h * h
    for m in range(mmax + 1):
        log_lead = m * logh - math.lgamma(m + 1)
        if log_lead < -745.0:
            break
        term = math.exp(log_lead)
        total = term
        k = 0
        while abs(term) > 1e-18 * abs(total) and k < 200:
            k += 1
            term *= -h2 / (k * (m + k))
            total += term
        out[m] = total
    return out


def _miller_range(mmax: int, x: float) -> np.ndarray:
    """J_0..J_mmax(x) for x > 0 by normalised downward recurrence."""
    top = max(mmax, int(x))
    start = top + 30 + int(math.sqrt(40.0 * top))
    start += start % 2
    vals = np.zeros(start + 2)
    jp1, j = 0.0, 1e-30
    vals[start] = j
    norm = 0.0
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        vals[k - 1] = j
        if abs(j) > _RESCALE:
            vals[k - 1:] /= _RESCALE
            jp1 /= _RESCALE
            j /= _RESCALE
            norm /= _RESCALE
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
    norm += vals[0]
    return vals[:mmax + 1] / norm


def bessel_j_range(mmax: int, x: float) -> np.ndarray:
    """Array ``[J_0(x), ..., J_mmax(x)]`` for real ``x`` with ``|x| <= 1000``."""
    if mmax < 0:
        raise DomainError("mmax must be non-negative")
    if not math.isfinite(x) or abs(x) > MAX_ABS_Z:
        raise DomainError(f"|z| must be <= {MAX_ABS_Z:g}, got {x}")
    ax = abs(x)
    if ax <= SERIES_SWITCH:
        vals = _power_series_range(mmax, ax)
    else:
        vals = _miller_range(mmax, ax)
    if x < 0:
        vals = vals * np.where(np.arange(mmax + 1) % 2 == 0, 1.0, -1.0)
    return vals


def bessel_j(m: int, z: float) -> float:
    """Bessel function of the first kind ``J_m(z)`` for integer ``m``, real ``z``."""
    m = int(m)
    val = float(bessel_j_range(abs(m), z)[abs(m)])
    return _parity(m) * val if m < 0 else val


def segment_series(z: float, M: int) -> LaurentSeries:
    """Truncated Bessel series ``sum_{|m| <= M} J_m(z) U^m``."""
    if M < 0:
        raise DomainError("M must be non-negative")
    pos = bessel_j_range(M, z)
    coeffs = np.empty(2 * M + 1)
    coeffs[M:] = pos
    signs = np.where(np.arange(1, M + 1) % 2 == 0, 1.0, -1.0)
    coeffs[:M] = (signs * pos[1:])[::-1]
    return LaurentSeries.from_array(-M, coeffs)


def bessel_tail_bound(z: float, M: int) -> float:
    """``4 |z/2|^{M+1} / (M+1)!``, an upper bound on ``sum_{|m|>M} |J_m(z)|``."""
    if M < 0:
        raise DomainError("M must be non-negative")
    if z == 0:
        return 0.0
    logb = math.log(4.0) + (M + 1) * math.log(abs(z) / 2.0) - math.lgamma(M + 2)
    return math.exp(logb) if logb < 709.0 else math.inf


def full_cutoff(z: float, tol: float = 1e-16) -> int:
    """Smallest cutoff whose analytic tail bound is at most ``tol``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    if z == 0:
        return 0
    # the factorial bound is only meaningful once M + 2 >= |z|
    M = max(0, int(math.ceil(abs(z))) - 2)
    while bessel_tail_bound(z, M) > tol:
        M += 1
    return M


def full_series(z: float, tol: float = 1e-16) -> LaurentSeries:
    """The exact segment operation, truncated where the tail bound drops below ``tol``."""
    return segment_series(z, full_cutoff(z, tol))


def tail_sum(z: float, M: int) -> float:
    """``sum_{|m| > M} |J_m(z)|``, summed until the terms fall below 1e-20."""
    if M < 0:
        raise DomainError("M must be non-negative")
    if z == 0:
        return 0.0
    mmax = max(M, full_cutoff(z, 1e-22)) + 2
    vals = np.abs(bessel_j_range(mmax, z))[M + 1:]
    return float(2.0 * np.sum(vals[vals >= 1e-20]))


def abs_bessel_sum(z: float) -> float:
    """``sum_{all m} |J_m(z)|``."""
    if z == 0:
        return 1.0
    mmax = full_cutoff(z, 1e-22) + 2
    vals = np.abs(bessel_j_range(mmax, z))
    return float(vals[0] + 2.0 * np.sum(vals[1:]))


@lru_cache(maxsize=None)
def z_cap() -> float:
    """Largest ``|z|`` with ``sum_m |J_m(z)| <= 2``, by bisection on [0, 2]."""
    lo, hi = 0.0, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if abs_bessel_sum(mid) <= 2.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return lo


@dataclass(frozen=True)
class SegmentSpec:
    """Bessel argument, per-segment cutoff and repetition counts.

    ``tau`` is stored alongside ``z`` so that ``z * r * r_prime == -tau`` holds
    by construction (``z`` is derived from ``tau`` in :meth:`from_tau`).
    """

    z: float
    M: int = 2
    r: int = 1
    r_prime: int | None = None
    tau: float | None = None
    trivial: bool = False

    def __post_init__(self):
        if self.z > 0:
            raise ParameterError(f"z must be <= 0, got {self.z}")
        if self.M < 2:
            raise ParameterError(f"M must be >= 2, got {self.M}")
        if self.r < 1 or (self.r_prime is not None and self.r_prime < 1):
            raise ParameterError("repetition counts must be >= 1")
        if self.tau is None:
            object.__setattr__(self, "tau", -self.z * self.r * (self.r_prime or 1))

    @classmethod
    def from_tau(cls, tau: float, M: int, r: int, r_prime: int | None = None) -> "SegmentSpec":
        reps = r * (r_prime or 1)
        z = -tau / reps if tau else 0.0
        return cls(z=z, M=M, r=r, r_prime=r_prime, tau=float(tau), trivial=(tau == 0))

    @property
    def rounds(self) -> int:
        return 1 if self.r_prime is None else 2


def default_r(tau: float) -> int:
    """Segments per compound segment for two rounds: ``ceil(log2 tau)``, at least 1."""
    if tau <= 1:
        return 1
    return max(1, math.ceil(math.log2(tau)))


def select_z(tau: float, rounds: int = 1, r_hint: int | None = None, M: int = 2) -> SegmentSpec:
    """Pick the largest admissible ``|z|`` with ``z * r (* r') = -tau``."""
    if tau < 0 or not math.isfinite(tau):
        raise ParameterError(f"tau must be a finite non-negative number, got {tau}")
    if rounds not in (1, 2):
        raise ParameterError("rounds must be 1 or 2")
    if tau == 0:
        return SegmentSpec(z=0.0, M=M, r=1, r_prime=1 if rounds == 2 else None,
                           tau=0.0, trivial=True)
    cap = z_cap()
    if rounds == 1:
        r = max(1, math.ceil(tau / cap))
        return SegmentSpec.from_tau(tau, M, r)
    r = r_hint if r_hint is not None else default_r(tau)
    if r < 1:
        raise ParameterError("r_hint must be >= 1")
    rp = max(1, math.ceil(tau / (r * cap)))
    return SegmentSpec.from_tau(tau, M, r, rp)
