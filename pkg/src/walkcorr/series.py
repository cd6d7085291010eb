"""Finite bilateral (Laurent) series in the walk step ``U``.

A series ``F = sum_m F_m U^m`` is stored densely over its support hull
``[lo, lo + len(coeffs) - 1]``.  Zero coefficients inside the hull are kept;
the hull itself is what the query accounting reads, so operations never
shrink it implicitly.  Use :meth:`LaurentSeries.trim` to opt in to pruning.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import DomainError

DEFAULT_TOL = 1e-14


class LaurentSeries:
    """Immutable finite Laurent series with complex coefficients."""

    __slots__ = ("_lo", "_c")

    def __init__(self, coeffs: Mapping[int, complex] | None = None):
        if not coeffs:
            self._lo = 0
            self._c = np.zeros(0, dtype=complex)
        else:
            keys = [int(k) for k in coeffs]
            lo, hi = min(keys), max(keys)
            c = np.zeros(hi - lo + 1, dtype=complex)
            for k, v in coeffs.items():
                c[int(k) - lo] += v
            self._lo = lo
            self._c = c
        self._c.flags.writeable = False

    @classmethod
    def from_array(cls, lo: int, coeffs) -> "LaurentSeries":
        """Build from a dense coefficient array whose first entry sits at ``lo``."""
        obj = cls.__new__(cls)
        c = np.array(coeffs, dtype=complex, copy=True).ravel()
        obj._lo = int(lo) if c.size else 0
        obj._c = c
        c.flags.writeable = False
        return obj

    @classmethod
    def zero(cls) -> "LaurentSeries":
        return cls()

    @classmethod
    def one(cls) -> "LaurentSeries":
        return cls({0: 1.0})

    @classmethod
    def monomial(cls, m: int, c: complex = 1.0) -> "LaurentSeries":
        return cls({m: c})

    # -- inspection -------------------------------------------------------

    @property
    def lo(self) -> int:
        return self._lo

    @property
    def hi(self) -> int:
        return self._lo + self._c.size - 1

    @property
    def coeffs(self) -> np.ndarray:
        """Read-only dense coefficient array (index 0 is exponent ``lo``)."""
        return self._c

    @property
    def exponents(self) -> np.ndarray:
        return np.arange(self._lo, self._lo + self._c.size)

    @property
    def max_power(self) -> int:
        """Largest ``|m|`` on the support hull (0 for the empty series)."""
        if self._c.size == 0:
            return 0
        return max(abs(self.lo), abs(self.hi))

    def is_empty(self) -> bool:
        return self._c.size == 0

    def __getitem__(self, m: int) -> complex:
        i = int(m) - self._lo
        if 0 <= i < self._c.size:
            return complex(self._c[i])
        return 0j

    def __len__(self) -> int:
        return self._c.size

    def items(self):
        for m, c in zip(self.exponents.tolist(), self._c.tolist()):
            yield m, c

    def to_dict(self, drop_zeros: bool = True) -> dict[int, complex]:
        return {m: c for m, c in self.items() if c != 0 or not drop_zeros}

    def __repr__(self) -> str:
        if self.is_empty():
            return "LaurentSeries({})"
        if len(self) <= 8:
            body = ", ".join(f"{m}: {c:.6g}" for m, c in self.items())
            return f"LaurentSeries({{{body}}})"
        return f"LaurentSeries(hull=[{self.lo}, {self.hi}], s={s_norm(self):.6g})"

    # -- arithmetic sugar ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, LaurentSeries):
            return combine(1.0, self, 1.0, other)
        return combine(1.0, self, complex(other), LaurentSeries.one())

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, LaurentSeries):
            return combine(1.0, self, -1.0, other)
        return combine(1.0, self, -complex(other), LaurentSeries.one())

    def __rsub__(self, other):
        return combine(-1.0, self, complex(other), LaurentSeries.one())

    def __neg__(self):
        return LaurentSeries.from_array(self._lo, -self._c)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return mul(self, other)
        return LaurentSeries.from_array(self._lo, self._c * complex(other))

    def __rmul__(self, other):
        return LaurentSeries.from_array(self._lo, self._c * complex(other))

    def __pow__(self, k: int):
        return power(self, k)

    @property
    def H(self) -> "LaurentSeries":
        """Adjoint, mirroring the numpy/scipy ``.H`` shorthand."""
        return adjoint(self)

    def equals(self, other: "LaurentSeries", tol: float = DEFAULT_TOL) -> bool:
        """Coefficient-wise absolute comparison; absent exponents count as 0."""
        return max_abs_diff(self, other) <= tol

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.equals(other)

    __hash__ = None  # type: ignore[assignment]

    def trim(self, mass: float = 0.0) -> "LaurentSeries":
        """Drop outer coefficients whose cumulative magnitude is at most ``mass``.

        At most ``mass / 2`` of s-mass is removed from each end, so the
        s-distance to the original is bounded by ``mass``.
        """
        if self._c.size == 0:
            return self
        a = np.abs(self._c)
        half = mass / 2.0
        left = np.cumsum(a)
        right = np.cumsum(a[::-1])
        i0 = int(np.searchsorted(left, half, side="right"))
        i1 = int(np.searchsorted(right, half, side="right"))
        if i0 + i1 >= a.size:
            return LaurentSeries()
        return LaurentSeries.from_array(self._lo + i0, self._c[i0:a.size - i1])


def _aligned(F: LaurentSeries, G: LaurentSeries):
    if F.is_empty() and G.is_empty():
        return 0, np.zeros(0, complex), np.zeros(0, complex)
    if F.is_empty():
        return G.lo, np.zeros(len(G), complex), G.coeffs
    if G.is_empty():
        return F.lo, F.coeffs, np.zeros(len(F), complex)
    lo = min(F.lo, G.lo)
    hi = max(F.hi, G.hi)
    a = np.zeros(hi - lo + 1, complex)
    b = np.zeros(hi - lo + 1, complex)
    a[F.lo - lo:F.hi - lo + 1] = F.coeffs
    b[G.lo - lo:G.hi - lo + 1] = G.coeffs
    return lo, a, b


def max_abs_diff(F: LaurentSeries, G: LaurentSeries) -> float:
    _, a, b = _aligned(F, G)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def combine(alpha: complex, F: LaurentSeries, beta: complex, G: LaurentSeries) -> LaurentSeries:
    """Return ``alpha*F + beta*G`` over the union of the two hulls."""
    lo, a, b = _aligned(F, G)
    return LaurentSeries.from_array(lo, alpha * a + beta * b)


def mul(F: LaurentSeries, G: LaurentSeries) -> LaurentSeries:
    """Cauchy product; dense direct convolution over the hulls."""
    if F.is_empty() or G.is_empty():
        return LaurentSeries()
    return LaurentSeries.from_array(F.lo + G.lo, np.convolve(F.coeffs, G.coeffs))


def power(F: LaurentSeries, k: int) -> LaurentSeries:
    if k < 0:
        raise DomainError("negative powers of a series are not defined")
    result = LaurentSeries.one()
    base = F
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def adjoint(F: LaurentSeries) -> LaurentSeries:
    """``(sum c_m U^m)^dagger = sum conj(c_m) U^{-m}`` for unitary ``U``."""
    if F.is_empty():
        return F
    return LaurentSeries.from_array(-F.hi, np.conj(F.coeffs[::-1]))


def truncate(F: LaurentSeries, cutoff: int) -> LaurentSeries:
    """Keep exactly the coefficients with ``|m| <= cutoff``.

    The result's hull is ``[-cutoff, cutoff]`` (zero padded), which is the
    structural size of the LCU that implements it.
    """
    if cutoff < 0:
        raise DomainError("cutoff must be non-negative")
    out = np.zeros(2 * cutoff + 1, dtype=complex)
    if not F.is_empty():
        lo = max(F.lo, -cutoff)
        hi = min(F.hi, cutoff)
        if lo <= hi:
            out[lo + cutoff:hi + cutoff + 1] = F.coeffs[lo - F.lo:hi - F.lo + 1]
    return LaurentSeries.from_array(-cutoff, out)


def s_norm(F: LaurentSeries) -> float:
    """The s-functional: sum of coefficient magnitudes."""
    return float(np.sum(np.abs(F.coeffs)))


def abs_series(F: LaurentSeries) -> LaurentSeries:
    return LaurentSeries.from_array(F.lo, np.abs(F.coeffs))


def eval_real(F: LaurentSeries, x: float) -> complex:
    """Evaluate ``sum F_m x^m`` at a positive real point."""
    if not x > 0:
        raise DomainError(f"eval_real needs x > 0, got {x}")
    if F.is_empty():
        return 0j
    logs = F.exponents * np.log(x)
    return complex(np.sum(F.coeffs * np.exp(logs)))


def apply_series(
    F: LaurentSeries,
    forward: Callable[[np.ndarray], np.ndarray],
    backward: Callable[[np.ndarray], np.ndarray],
    block: np.ndarray,
) -> np.ndarray:
    """Compute ``sum_m F_m U^m @ block`` by incremental powering.

    ``forward`` applies ``U`` and ``backward`` applies ``U^{-1}``.  Uses at
    most ``max(hi, 0)`` forward and ``max(-lo, 0)`` backward applications.
    """
    acc = np.zeros_like(block, dtype=complex)
    if F.is_empty():
        return acc
    acc = acc + F[0] * block
    cur = block
    for m in range(1, max(F.hi, 0) + 1):
        cur = forward(cur)
        c = F[m]
        if c != 0:
            acc = acc + c * cur
    cur = block
    for m in range(1, max(-F.lo, 0) + 1):
        cur = backward(cur)
        c = F[-m]
        if c != 0:
            acc = acc + c * cur
    return acc


def _check_unitary(U: np.ndarray, tol: float = 1e-10) -> None:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {U.shape}")
    dev = np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2)
    if dev > tol:
        raise DomainError(f"matrix is not unitary: ||U^dag U - I|| = {dev:.3e}")


def eval_matrix(F: LaurentSeries, U: np.ndarray) -> np.ndarray:
    """Return the matrix ``sum_m F_m U^m`` for a unitary ``U``."""
    U = np.asarray(U, dtype=complex)
    _check_unitary(U)
    Ud = U.conj().T
    eye = np.eye(U.shape[0], dtype=complex)
    return apply_series(F, lambda X: U @ X, lambda X: Ud @ X, eye)


def check_alternating_symmetry(F: LaurentSeries, tol: float = 1e-12) -> bool:
    """True iff ``|F_{-n} - (-1)^n F_n| <= tol`` for every exponent on the hull."""
    return alternating_asymmetry(F) <= tol


def alternating_asymmetry(F: LaurentSeries) -> float:
    """Largest violation of ``F_{-n} = (-1)^n F_n``."""
    if F.is_empty():
        return 0.0
    P = max(abs(F.lo), abs(F.hi))
    full = np.zeros(2 * P + 1, complex)
    full[F.lo + P:F.hi + P + 1] = F.coeffs
    n = np.arange(0, P + 1)
    pos = full[P + n]
    neg = full[P - n]
    sign = np.where(n % 2 == 0, 1.0, -1.0)
    return float(np.max(np.abs(neg - sign * pos)))
