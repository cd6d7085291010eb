"""Concrete walk operator and statevector LCU/OAA at desk scale.

Register layout is ``|j1>|b1>|j2>|b2>``; one copy ``|j>|b>`` has index
``2*j + b`` in ``C^{2N}`` and the doubled space has index ``a*2N + c``.
``U = i S (2 T T^dag - 1)`` is applied matrix-free; the dense matrix is
only materialised on request for small systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bessel import full_series
from .errors import DegenerateError, PreconditionError, ResourceError
from .hamiltonian import QueryLedger, SparseHamiltonian
from .series import LaurentSeries, apply_series, s_norm

MAX_DIM = 64
MAX_DENSE_WALK = 1024


@dataclass(frozen=True, eq=False)
class WalkSpace:
    """Isometry ``T``, swap ``S`` and walk step ``U`` for one Hamiltonian.

    ``shift`` is the multiple of the identity added to ``H_ref`` so that its
    diagonal is non-negative (see :func:`build_walk`); ``X`` and ``d`` belong
    to the shifted matrix ``H_walk``.
    """

    H_ref: SparseHamiltonian
    H_walk: np.ndarray
    shift: float
    X: float
    d: int
    T: sp.csr_matrix
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.H_ref.dim

    @property
    def copy_dim(self) -> int:
        return 2 * self.dim

    @property
    def walk_dim(self) -> int:
        return self.copy_dim ** 2

    @property
    def Tt(self) -> sp.csr_matrix:
        if "Tt" not in self._cache:
            self._cache["Tt"] = self.T.conj().T.tocsr()
        return self._cache["Tt"]

    def swap(self, v: np.ndarray) -> np.ndarray:
        c = self.copy_dim
        if v.ndim == 1:
            return v.reshape(c, c).T.reshape(-1)
        k = v.shape[1]
        return v.reshape(c, c, k).transpose(1, 0, 2).reshape(c * c, k)

    def reflect(self, v: np.ndarray) -> np.ndarray:
        """``(2 T T^dag - 1) v``."""
        return 2.0 * (self.T @ (self.Tt @ v)) - v

    def apply_U(self, v: np.ndarray) -> np.ndarray:
        return 1j * self.swap(self.reflect(v))

    def apply_Udag(self, v: np.ndarray) -> np.ndarray:
        return -1j * self.reflect(self.swap(v))

    def embed(self) -> np.ndarray:
        """``T iota`` as a dense ``walk_dim x dim`` block (input ancilla b1 = 0)."""
        if "Ti" not in self._cache:
            self._cache["Ti"] = self.T[:, 0::2].toarray()
        return self._cache["Ti"]

    def _dense_guard(self):
        if self.walk_dim > MAX_DENSE_WALK:
            raise ResourceError(
                f"dense walk matrices limited to dimension {MAX_DENSE_WALK}, need {self.walk_dim}"
            )

    @property
    def T_dense(self) -> np.ndarray:
        self._dense_guard()
        return self.T.toarray()

    @property
    def S(self) -> np.ndarray:
        self._dense_guard()
        return self.swap(np.eye(self.walk_dim, dtype=complex))

    @property
    def U(self) -> np.ndarray:
        self._dense_guard()
        if "U" not in self._cache:
            self._cache["U"] = self.apply_U(np.eye(self.walk_dim, dtype=complex))
        return self._cache["U"]

    def tau(self, t: float) -> float:
        return t * self.X * self.d


def _branch_sqrt(H: np.ndarray, j: int, l: int, X: float) -> complex:
    """Square root of ``conj(H[j, l]) / X`` with a consistent branch.

    The principal root is used for ``j <= l``; the mirrored entry takes the
    conjugate of its partner's root, so ``g[k,j] conj(g[j,k]) = H[j,k] / X``
    holds for every off-diagonal pair, negative reals included.
    """
    if j <= l:
        return complex(np.sqrt(np.conj(H[j, l]) / X + 0j))
    return complex(np.conj(np.sqrt(np.conj(H[l, j]) / X + 0j)))


def build_walk(H: SparseHamiltonian, allow_shift: bool = True) -> WalkSpace:
    """Assemble ``T`` for ``H`` and validate ``T^dag T = 1``.

    The diagonal of ``T^dag S T`` on the ``b = 0`` block is ``|sqrt(H_jj)|^2``,
    which cannot be negative; Hamiltonians with negative diagonal entries are
    therefore shifted by ``-min(diag)`` times the identity (a global phase
    ``e^{-i shift t}`` that callers undo).
    """
    if H.dim > MAX_DIM:
        raise ResourceError(f"dim {H.dim} exceeds the desk-scale limit {MAX_DIM}")
    M = np.array(H.matrix)
    dmin = float(np.min(M.diagonal().real)) if H.dim else 0.0
    shift = 0.0
    if dmin < 0:
        if not allow_shift:
            raise DegenerateError("negative diagonal entries need an identity shift")
        shift = -dmin
        M = M + shift * np.eye(H.dim)
        M[np.abs(M) < 1e-15 * max(1.0, shift)] = 0.0
    X = float(np.max(np.abs(M))) if H.dim else 0.0
    if X == 0.0:
        raise DegenerateError("X = 0: the zero Hamiltonian has no walk (simulate it as identity)")
    counts = np.count_nonzero(M, axis=1)
    d = max(H.d, int(counts.max()))
    N = H.dim
    c = 2 * N
    rows, cols, vals = [], [], []
    amp = 1.0 / np.sqrt(d)
    for j in range(N):
        # b = 1: phi_j1 = |0>|1>
        rows.append((2 * j + 1) * c + 1)
        cols.append(2 * j + 1)
        vals.append(1.0)
        support = list(np.flatnonzero(M[j]))
        filler = (l for l in range(N) if l not in set(support))
        while len(support) < d:
            support.append(next(filler))
        for l in sorted(support):
            h = M[j, l]
            g = _branch_sqrt(M, j, l, X) if h != 0 else 0j
            rest = max(0.0, 1.0 - abs(h) / X)
            base = (2 * j) * c + 2 * l
            rows += [base, base + 1]
            cols += [2 * j, 2 * j]
            vals += [g * amp, np.sqrt(rest) * amp]
    T = sp.csr_matrix((vals, (rows, cols)), shape=(c * c, c), dtype=complex)
    T.eliminate_zeros()
    gram = (T.conj().T @ T).toarray()
    dev = np.max(np.abs(gram - np.eye(c)))
    if dev > 1e-12:
        raise PreconditionError(f"T is not an isometry: max |T^dag T - I| = {dev:.3e}")
    return WalkSpace(H_ref=H, H_walk=M, shift=shift, X=X, d=d, T=T)


@dataclass
class SpectralEntry:
    eigenvalue: float
    mu_plus: complex
    mu_minus: complex
    residual: float
    identity_residual: float
    coalesced: bool


@dataclass
class SpectralReport:
    entries: list[SpectralEntry]

    @property
    def max_residual(self) -> float:
        return max((e.residual for e in self.entries), default=0.0)

    @property
    def max_identity_residual(self) -> float:
        return max((e.identity_residual for e in self.entries), default=0.0)

    def ok(self, tol: float = 1e-10) -> bool:
        return self.max_residual <= tol and self.max_identity_residual <= tol


def walk_eigenvalues(x: float) -> tuple[complex, complex]:
    """``mu_pm = +-exp(+-i arcsin x)`` for ``x = lambda / (X d)``."""
    theta = np.arcsin(np.clip(x, -1.0, 1.0))
    return complex(np.exp(1j * theta)), complex(-np.exp(-1j * theta))


def verify_spectral_map(W: WalkSpace, t: float = 1.0) -> SpectralReport:
    """Check that ``T|lambda>|0>`` lies in the ``mu_pm`` eigenspace pair of ``U``.

    Membership is tested through ``(U - mu_+)(U - mu_-) w = 0``, which also
    covers the coalesced edge ``mu_+ = mu_-``.  The Bessel generating-function
    identity is checked at ``z = -t X d`` for both eigenvalues.
    """
    lam, vecs = np.linalg.eigh(W.H_ref.matrix)
    Ti = W.embed()
    F = full_series(-t * W.X * W.d)
    ms = F.exponents
    entries = []
    for i, l in enumerate(lam):
        lw = l + W.shift
        x = lw / (W.X * W.d)
        mp, mm = walk_eigenvalues(x)
        w = Ti @ vecs[:, i]
        Uw = W.apply_U(w)
        UUw = W.apply_U(Uw)
        res = UUw - (mp + mm) * Uw + (mp * mm) * w
        target = np.exp(-1j * lw * t)
        ident = max(abs(np.sum(F.coeffs * mu ** ms) - target) for mu in (mp, mm))
        entries.append(SpectralEntry(
            eigenvalue=float(l),
            mu_plus=mp,
            mu_minus=mm,
            residual=float(np.linalg.norm(res) / np.linalg.norm(w)),
            identity_residual=float(ident),
            coalesced=bool(abs(mp - mm) < 1e-8),
        ))
    return SpectralReport(entries)


def effective_operator(W: WalkSpace, F: LaurentSeries, ledger: QueryLedger | None = None) -> np.ndarray:
    """``iota^dag T^dag F(U) T iota`` on the original space.

    Charges ``2 * max|m|`` walk steps.  The identity shift is *not* undone
    here; see :func:`shifted_phase`.
    """
    Ti = W.embed()
    out = apply_series(F, W.apply_U, W.apply_Udag, Ti)
    if ledger is not None:
        ledger.charge(2 * F.max_power)
    return Ti.conj().T @ out


def shifted_phase(W: WalkSpace, t: float) -> complex:
    """Factor mapping ``exp(-i H_walk t)`` back to ``exp(-i H t)``."""
    return complex(np.exp(1j * W.shift * t))


def exact_evolution(H: SparseHamiltonian, t: float) -> np.ndarray:
    """``exp(-i H t)`` from an eigendecomposition."""
    lam, vecs = np.linalg.eigh(H.matrix)
    return (vecs * np.exp(-1j * lam * t)) @ vecs.conj().T


def complete_unitary(v: np.ndarray) -> np.ndarray:
    """Unitary ``B`` with ``B[:, 0] = v`` (Householder reflection times a phase)."""
    v = np.asarray(v, dtype=complex)
    n = v.size
    v = v / np.linalg.norm(v)
    phase = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    e0 = np.zeros(n, complex)
    e0[0] = phase
    u = e0 - v
    nu = np.vdot(u, u).real
    if nu < 1e-30:
        return phase * np.eye(n, dtype=complex)
    H = np.eye(n, dtype=complex) - 2.0 * np.outer(u, u.conj()) / nu
    return phase * H


@dataclass
class LcuRegister:
    """Ancilla register for one LCU over powers ``-M..M``.

    The ancilla index ``i`` carries the label ``m = i - M``; index 0 is the
    ancilla's zero state.  ``prep[:, 0] = chi = sqrt(F_m)/sqrt(s)`` and the
    unpreparation row ``<0| unprep`` equals ``chi`` as well (principal roots in
    both), so the flagged block is ``F(U) / s`` even for negative or complex
    coefficients.
    """

    M: int
    chi: np.ndarray
    s_value: float
    prep: np.ndarray
    unprep: np.ndarray

    @property
    def ancilla_dim(self) -> int:
        return 2 * self.M + 1


def lcu_register(F: LaurentSeries) -> LcuRegister:
    s = s_norm(F)
    if s == 0.0:
        raise DegenerateError("cannot build an LCU for the zero series")
    M = F.max_power
    roots = np.array([np.sqrt(complex(F[m])) for m in range(-M, M + 1)])
    chi = roots / np.sqrt(s)
    prep = complete_unitary(chi)
    unprep = complete_unitary(np.conj(chi)).conj().T
    return LcuRegister(M=M, chi=chi, s_value=s, prep=prep, unprep=unprep)


def _select(W: WalkSpace, state: np.ndarray, M: int, inverse: bool,
            ledger: QueryLedger | None) -> np.ndarray:
    """Ladder realisation of ``select(U)`` on an ancilla axis of length ``2M+1``.

    ``state`` has shape ``(..., 2M+1, D)``.  Step ``k`` applies ``U`` to
    labels ``m >= k`` and ``U^dag`` to ``m <= -k``: ``2M`` controlled steps.
    """
    out = state.copy()
    fwd, bwd = (W.apply_Udag, W.apply_U) if inverse else (W.apply_U, W.apply_Udag)
    for k in range(1, M + 1):
        up = slice(M + k, 2 * M + 1)
        down = slice(0, M - k + 1)
        for sl, op in ((up, fwd), (down, bwd)):
            blk = out[..., sl, :]
            shape = blk.shape
            flat = blk.reshape(-1, shape[-1]).T
            out[..., sl, :] = op(flat).T.reshape(shape)
    if ledger is not None:
        ledger.record_select(M)
    return out


def _on_axis(B: np.ndarray, state: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(B, state, axes=([1], [axis])), 0, axis)


def lcu_apply(W: WalkSpace, F: LaurentSeries, psi: np.ndarray,
              ledger: QueryLedger | None = None):
    """Prepare, ``select(U)``, unprepare.  Returns ``(flagged, s, full_state)``.

    ``psi`` lives on the walk space; ``flagged`` equals ``F(U) psi / s``.
    """
    circ = lcu_register(F)
    M = circ.M
    state = np.zeros((2 * M + 1, W.walk_dim), complex)
    state[0] = psi
    state = _on_axis(circ.prep, state, 0)
    state = _select(W, state, M, False, ledger)
    state = _on_axis(circ.unprep, state, 0)
    return state[0].copy(), circ.s_value, state


def oaa_apply(W: WalkSpace, F: LaurentSeries, psi: np.ndarray,
              ledger: QueryLedger | None = None) -> np.ndarray:
    """One OAA step on the LCU for ``F`` with ``s`` padded to exactly 2.

    A padding qubit is rotated to amplitude ``s/2`` on ``|0>``; success needs
    it and the LCU ancilla in ``|0>``.  The padded block is ``F/2``, so the
    flagged output is ``(3/2) F psi - (1/2) F F^dag F psi``.
    """
    circ = lcu_register(F)
    s = circ.s_value
    if s > 2.0 + 1e-12:
        raise PreconditionError(f"OAA in one step needs s <= 2, got s = {s:.6g}")
    a = min(1.0, s / 2.0)
    b = np.sqrt(max(0.0, 1.0 - a * a))
    R = np.array([[a, -b], [b, a]], dtype=complex)
    M = circ.M

    def forward(x):
        x = _on_axis(R, x, 0)
        x = _on_axis(circ.prep, x, 1)
        x = _select(W, x, M, False, ledger)
        return _on_axis(circ.unprep, x, 1)

    def backward(x):
        x = _on_axis(circ.unprep.conj().T, x, 1)
        x = _select(W, x, M, True, ledger)
        x = _on_axis(circ.prep.conj().T, x, 1)
        return _on_axis(R.conj().T, x, 0)

    def reflect(x):
        x = x.copy()
        x[0, 0] *= -1.0
        return x

    state = np.zeros((2, 2 * M + 1, W.walk_dim), complex)
    state[0, 0] = psi
    x = forward(state)
    x = reflect(x)
    x = backward(x)
    x = reflect(x)
    x = forward(x)
    return -x[0, 0]
