"""Sparse Hermitian Hamiltonians behind position/value oracles, plus a query ledger."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, HermiticityError, ParameterError, SparsityError

MAX_QUBITS = 6
# documents may describe larger systems; the walk builder rejects them later
MAX_LOAD_QUBITS = 12
QUERIES_PER_STEP = 4


class SparseHamiltonian:
    """Immutable d-sparse Hermitian matrix on ``n`` qubits.

    Rows are kept as ascending column lists; ``oracle_f`` reads them in that
    order.  ``d`` is the declared sparseness and may exceed the actual
    maximum row count.
    """

    def __init__(self, matrix, d: int | None = None):
        H = np.array(matrix, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise FormatError(f"Hamiltonian must be square, got shape {H.shape}")
        dim = H.shape[0]
        n = dim.bit_length() - 1
        if dim < 1 or 2 ** n != dim:
            raise FormatError(f"dimension {dim} is not a power of two")
        _check_hermitian(H)
        counts = np.count_nonzero(H, axis=1)
        actual = int(counts.max()) if dim else 0
        if d is None:
            d = max(actual, 1)
        if d < 1 or d > dim:
            raise ParameterError(f"sparseness d={d} outside [1, {dim}]")
        if actual > d:
            row = int(np.argmax(counts))
            raise SparsityError(f"row {row} has {actual} nonzeros > d={d}")
        H.flags.writeable = False
        self._H = H
        self.n = n
        self.dim = dim
        self.d = int(d)
        self._rows = tuple(np.flatnonzero(H[j]) for j in range(dim))

    @property
    def matrix(self) -> np.ndarray:
        """Dense read-only view of the entries."""
        return self._H

    @property
    def max_norm(self) -> float:
        return float(np.max(np.abs(self._H))) if self.dim else 0.0

    def row_support(self, j: int) -> np.ndarray:
        return self._rows[j]

    def nnz(self) -> int:
        return int(sum(len(r) for r in self._rows))

    def oracle_f(self, j: int, l: int) -> int:
        """Column of the ``l``-th (1-based) nonzero of row ``j``."""
        row = self._rows[j]
        if not 1 <= l <= len(row):
            raise IndexError(f"row {j} has {len(row)} nonzeros; l={l} is out of range")
        return int(row[l - 1])

    def oracle_h(self, j: int, k: int) -> complex:
        if not (0 <= j < self.dim and 0 <= k < self.dim):
            raise IndexError(f"({j}, {k}) outside a {self.dim}x{self.dim} matrix")
        return complex(self._H[j, k])

    def __eq__(self, other):
        if not isinstance(other, SparseHamiltonian):
            return NotImplemented
        return self.d == other.d and np.array_equal(self._H, other._H)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"SparseHamiltonian(n={self.n}, d={self.d}, nnz={self.nnz()}, max_norm={self.max_norm:.4g})"


def _check_hermitian(H: np.ndarray) -> None:
    bad = np.argwhere(H != H.conj().T)
    if bad.size:
        j, k = (int(v) for v in bad[0])
        raise HermiticityError(
            f"H[{j},{k}] = {H[j, k]} but conj(H[{k},{j}]) = {np.conj(H[k, j])}"
        )


def oracle_f(H: SparseHamiltonian, j: int, l: int) -> int:
    return H.oracle_f(j, l)


def oracle_h(H: SparseHamiltonian, j: int, k: int) -> complex:
    return H.oracle_h(j, k)


def random_sparse(n: int, d: int, seed: int) -> SparseHamiltonian:
    """Seeded random Hermitian matrix with at most ``d`` nonzeros per row.

    Nonzero positions are placed in symmetric pairs, so Hermiticity holds by
    construction.  Off-diagonal magnitudes are at most 1; the diagonal is
    real in [-1, 1].
    """
    if not 0 <= n <= MAX_QUBITS:
        raise ParameterError(f"n must be in [0, {MAX_QUBITS}], got {n}")
    dim = 2 ** n
    if not 1 <= d <= dim:
        raise ParameterError(f"d must be in [1, {dim}] for n={n}, got {d}")
    rng = np.random.default_rng(seed)
    H = np.zeros((dim, dim), dtype=complex)
    load = np.zeros(dim, dtype=int)
    pairs = [(j, k) for j in range(dim) for k in range(j, dim)]
    for idx in rng.permutation(len(pairs)):
        j, k = pairs[idx]
        if j == k:
            if load[j] < d:
                H[j, j] = rng.uniform(-1.0, 1.0)
                load[j] += 1
        elif load[j] < d and load[k] < d:
            mag = rng.uniform(0.1, 1.0)
            phase = rng.uniform(0.0, 2 * np.pi)
            H[j, k] = mag * np.exp(1j * phase)
            H[k, j] = np.conj(H[j, k])
            load[j] += 1
            load[k] += 1
    if not np.any(H):
        H[0, 0] = 1.0
    return SparseHamiltonian(H, d=d)


def save(H: SparseHamiltonian) -> str:
    """Serialise the upper triangle to the JSON document format."""
    entries = []
    M = H.matrix
    for j in range(H.dim):
        for k in H.row_support(j):
            k = int(k)
            if j <= k:
                v = complex(M[j, k])
                entries.append({"row": j, "col": k, "re": v.real, "im": v.imag})
    return json.dumps({"n": H.n, "d": H.d, "entries": entries}, indent=1)


def load(text: str) -> SparseHamiltonian:
    """Parse and validate a Hamiltonian document.

    Entries with ``row > col`` are accepted only when they agree with the
    conjugate of the mirrored upper entry.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    for key in ("n", "d", "entries"):
        if key not in doc:
            raise FormatError(f"missing key {key!r}")
    n, d, entries = doc["n"], doc["d"], doc["entries"]
    if not isinstance(n, int) or isinstance(n, bool) or not 0 <= n <= MAX_LOAD_QUBITS:
        raise FormatError(f"'n' must be an integer in [0, {MAX_LOAD_QUBITS}], got {n!r}")
    if not isinstance(d, int) or isinstance(d, bool):
        raise FormatError(f"'d' must be an integer, got {d!r}")
    if not isinstance(entries, list):
        raise FormatError("'entries' must be a list")
    dim = 2 ** n
    H = np.zeros((dim, dim), dtype=complex)
    seen: set[tuple[int, int]] = set()
    lower: list[tuple[int, int, complex]] = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or not {"row", "col", "re", "im"} <= set(e):
            raise FormatError(f"entry {i} must have keys row, col, re, im")
        j, k = e["row"], e["col"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (j, k)):
            raise FormatError(f"entry {i}: row/col must be integers")
        if not (0 <= j < dim and 0 <= k < dim):
            raise FormatError(f"entry {i}: ({j}, {k}) outside a {dim}x{dim} matrix")
        try:
            v = complex(float(e["re"]), float(e["im"]))
        except (TypeError, ValueError):
            raise FormatError(f"entry {i}: re/im must be numbers") from None
        if (j, k) in seen:
            raise FormatError(f"entry {i}: duplicate entry ({j}, {k})")
        seen.add((j, k))
        if j == k and v.imag != 0.0:
            raise HermiticityError(f"diagonal entry ({j}, {j}) = {v} is not real")
        if j <= k:
            H[j, k] = v
            if j != k:
                H[k, j] = v.conjugate()
        else:
            lower.append((j, k, v))
    for j, k, v in lower:
        if (k, j) in seen:
            if H[j, k] != v:
                raise HermiticityError(
                    f"H[{j},{k}] = {v} but conj(H[{k},{j}]) = {H[j, k]}"
                )
        else:
            H[j, k] = v
            H[k, j] = v.conjugate()
    if not 1 <= d <= dim:
        raise ParameterError(f"sparseness d={d} outside [1, {dim}]")
    return SparseHamiltonian(H, d=d)


@dataclass
class QueryLedger:
    """Walk-step and oracle-query counters.

    One walk step (``U`` or ``U^dag``, controlled or not) costs four oracle
    queries: ``T`` and ``T^dag`` each use one ``O_F`` and one ``O_H`` call.
    """

    walk_steps: int = 0
    lcu_selects: list[int] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def oracle_queries(self) -> int:
        return QUERIES_PER_STEP * self.walk_steps

    def charge(self, steps: int) -> None:
        if steps < 0:
            raise ValueError("cannot charge a negative number of steps")
        with self._lock:
            self.walk_steps += int(steps)

    def record_select(self, cutoff: int) -> None:
        """Record one ``select(U)`` with ladder cutoff ``M`` (costs ``2M`` steps)."""
        with self._lock:
            self.lcu_selects.append(int(cutoff))
            self.walk_steps += 2 * int(cutoff)

    def totals(self) -> dict:
        return {
            "walk_steps": self.walk_steps,
            "oracle_queries": self.oracle_queries,
            "lcu_selects": len(self.lcu_selects),
        }
