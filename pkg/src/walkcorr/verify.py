"""Property suites runnable from the command line (``walkcorr verify``)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bessel, correction, planner
from .hamiltonian import random_sparse
from .series import (
    LaurentSeries,
    adjoint,
    alternating_asymmetry,
    combine,
    eval_matrix,
    mul,
    s_norm,
    truncate,
)
from .walk import build_walk, lcu_apply, oaa_apply, verify_spectral_map

SUITES = ("series", "bessel", "walk", "correction", "planner")


@dataclass
class Check:
    name: str
    value: float
    limit: float
    ok: bool

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag}  {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def _le(name: str, value: float, limit: float) -> Check:
    return Check(name, float(value), float(limit), bool(value <= limit))


def random_series(rng: np.random.Generator, max_hull: int = 6, symmetric: bool = False) -> LaurentSeries:
    lo = int(rng.integers(-max_hull, max_hull + 1))
    width = int(rng.integers(1, max_hull + 2))
    c = rng.normal(size=width) + 1j * rng.normal(size=width)
    F = LaurentSeries.from_array(lo, c)
    if symmetric:
        M = F.max_power
        vals = {}
        for n in range(0, M + 1):
            vals[n] = F[n]
            if n:
                vals[-n] = (-1) ** n * F[n]
        F = LaurentSeries(vals)
    return F


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def suite_series(rng: np.random.Generator, pairs: int = 1000) -> list[Check]:
    sub = sub_eq = subm = adj = 0.0
    for _ in range(pairs):
        F, G = random_series(rng), random_series(rng)
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        sub = max(sub, s_norm(combine(a, F, b, G)) - abs(a) * s_norm(F) - abs(b) * s_norm(G))
        shifted = mul(G, LaurentSeries.monomial(F.hi - G.lo + 1))
        sub_eq = max(sub_eq, abs(s_norm(combine(a, F, b, shifted))
                                 - abs(a) * s_norm(F) - abs(b) * s_norm(shifted)))
        subm = max(subm, s_norm(mul(F, G)) / (s_norm(F) * s_norm(G)) - 1.0)
        adj = max(adj, abs(s_norm(adjoint(F)) - s_norm(F)))
    closure = 0.0
    for _ in range(200):
        F, G = random_series(rng, symmetric=True), random_series(rng, symmetric=True)
        for H in (combine(0.3, F, -1.7, G), mul(F, G), adjoint(F), truncate(F, 2)):
            closure = max(closure, alternating_asymmetry(H))
    hom = 0.0
    for _ in range(20):
        U = random_unitary(rng, 4)
        F, G = random_series(rng, 4), random_series(rng, 4)
        lhs = eval_matrix(mul(F, G), U)
        hom = max(hom, np.linalg.norm(lhs - eval_matrix(F, U) @ eval_matrix(G, U), 2))
    return [
        _le("subadditivity excess", sub, 1e-12),
        _le("disjoint-support equality gap", sub_eq, 1e-12),
        _le("submultiplicativity relative excess", subm, 1e-12),
        _le("adjoint s-isometry gap", adj, 1e-12),
        _le("alternating symmetry closure", closure, 1e-12),
        _le("eval_matrix homomorphism", hom, 1e-10),
    ]


def suite_bessel(rng: np.random.Generator) -> list[Check]:
    parity = 0.0
    for z in rng.uniform(-30, 30, size=20):
        vals = [bessel.bessel_j(m, z) for m in range(0, 40)]
        neg = [bessel.bessel_j(-m, z) for m in range(0, 40)]
        parity = max(parity, max(abs(n - (-1) ** m * v) for m, (v, n) in enumerate(zip(vals, neg))))
    norm = 0.0
    for z in np.linspace(-5, 5, 21):
        F = bessel.full_series(z, 1e-18)
        norm = max(norm, abs(np.sum(np.abs(F.coeffs) ** 2) - 1.0))
    overlap = 0.0
    for x in np.linspace(0.5, 2.0, 7):
        overlap = max(overlap, np.max(np.abs(bessel._power_series_range(30, x) - bessel._miller_range(30, x))))
    tail_excess = 0.0
    for z in (-0.3, -0.8, -1.0, -2.0, -5.0):
        for M in range(2, 15):
            tail_excess = max(tail_excess, bessel.tail_sum(z, M) - bessel.bessel_tail_bound(z, M))
    prod = s_cap = 0.0
    for tau in (0.5, 1.0, 2.2, 4.0, 7.3, 16.0, 31.0):
        for rounds in (1, 2):
            spec = bessel.select_z(tau, rounds)
            prod = max(prod, abs(spec.z * spec.r * (spec.r_prime or 1) + tau) / tau)
            for M in range(0, 12):
                s_cap = max(s_cap, s_norm(bessel.segment_series(spec.z, M)) - 2.0)
    ident = 0.0
    for seed in range(3):
        W = build_walk(random_sparse(2, 2, seed))
        ident = max(ident, verify_spectral_map(W, 1.3).max_identity_residual)
    return [
        _le("parity J_{-m} = (-1)^m J_m", parity, 0.0),
        _le("sum J_m^2 = 1 for |z| <= 5", norm, 1e-12),
        _le("power series vs Miller overlap", overlap, 1e-13),
        _le("tail_sum - factorial bound", tail_excess, 0.0),
        _le("select_z relative product gap", prod, 1e-15),
        _le("s(segment at selected z) - 2", s_cap, 0.0),
        _le("generating-function identity", ident, 1e-10),
    ]


def suite_walk(rng: np.random.Generator) -> list[Check]:
    iso = uni = inv = 0.0
    spec = 0.0
    for n, d in ((1, 1), (1, 2), (2, 2), (2, 3), (3, 4)):
        for seed in range(2):
            W = build_walk(random_sparse(n, d, seed))
            T = W.T_dense
            iso = max(iso, np.max(np.abs(T.conj().T @ T - np.eye(W.copy_dim))))
            U = W.U
            uni = max(uni, np.max(np.abs(U.conj().T @ U - np.eye(W.walk_dim))))
            S = W.S
            inv = max(inv, np.max(np.abs(S @ S - np.eye(W.walk_dim))))
            spec = max(spec, verify_spectral_map(W, float(rng.uniform(0.1, 3.0))).max_residual)
    lcu = oaa = 0.0
    for case in range(20):
        W = build_walk(random_sparse(int(rng.integers(1, 3)), 2, case))
        U = W.U
        M = int(rng.integers(1, 5))
        z = -float(rng.uniform(0.05, bessel.z_cap()))
        F = bessel.segment_series(z, M)
        psi = rng.normal(size=W.walk_dim) + 1j * rng.normal(size=W.walk_dim)
        psi /= np.linalg.norm(psi)
        flagged, s, _ = lcu_apply(W, F, psi)
        lcu = max(lcu, np.linalg.norm(flagged - eval_matrix(F, U) @ psi / s))
        out = oaa_apply(W, F, psi)
        oaa = max(oaa, np.linalg.norm(out - eval_matrix(correction.oaa_series(F), U) @ psi))
    return [
        _le("T^dag T - I", iso, 1e-12),
        _le("U^dag U - I", uni, 1e-12),
        _le("S^2 - I", inv, 1e-12),
        _le("spectral-map span residual", spec, 1e-10),
        _le("LCU flagged block vs F/s", lcu, 1e-12),
        _le("OAA flagged block vs series", oaa, 1e-12),
    ]


def suite_correction(rng: np.random.Generator) -> list[Check]:
    routes = first = sym = 0.0
    s_ratio = tail_ratio = decay_ratio = 0.0
    zeta = planner.solve_constants().zeta
    for z in (-0.4, -0.8, -1.0):
        V = bessel.full_series(z)
        for M in (2, 3, 4):
            Vt = bessel.segment_series(z, M)
            D = V - Vt
            W = correction.w_first(V, Vt)
            routes = max(routes, np.max(np.abs((W - correction.w_first_expanded(Vt, D)).coeffs)))
            tail = bessel.tail_sum(z, M)
            for r in range(1, 9):
                N = 3 * r * M
                res = correction.correction_first(W, r, cutoff=N)
                if z != -1.0 and M in (2, 3) and r <= 5:
                    first = max(first, correction.verify_first(Vt, res, r, z))
                sym = max(sym, alternating_asymmetry(res.series), alternating_asymmetry(res.truncated))
                s_ratio = max(s_ratio, res.s_total / ((1 - 2 * tail) ** (-r) * 1.05))
                base = abs(z) * zeta / M
                for m, a in res.series.items():
                    if abs(m) > M:
                        decay_ratio = max(decay_ratio, abs(a) / (2 ** r * base ** abs(m) * 1.05))
                tail_n = sum(abs(a) for m, a in res.series.items() if abs(m) > N)
                tail_ratio = max(tail_ratio, tail_n / (2 ** (r + 1) * base ** (N + 1) * 2))
    second, gap, s2_ratio, tail2_ratio = _second_round_grid()
    return [
        _le("W short vs expanded form", routes, 1e-12),
        _le("W' direct vs Gram-expanded route", gap, 1e-12),
        _le("first-round identity residual", first, 1e-8),
        _le("second-round identity residual", second, 1e-6),
        _le("alternating asymmetry of corrections", sym, 1e-12),
        _le("s(V_C) / (1.05 x lemma2_s)", s_ratio, 1.0),
        _le("|a_m| / (1.05 x decay bound)", decay_ratio, 1.0),
        _le("tail at N / (2 x lemma4_tail)", tail_ratio, 1.0),
        _le("s(V_C') / (2 x lemma6_s)", s2_ratio, 1.0),
        _le("tail at N' / (2 x lemma7_tail)", tail2_ratio, 1.0),
    ]


def _second_round_grid() -> tuple[float, float, float, float]:
    """Identity residual at (z, M, r, r') = (-0.8, 2, 3, 2) and second-round bound ratios on a small grid."""
    residual = gap = s2_ratio = tail2_ratio = 0.0
    for z, M, r in ((-0.8, 2, 3), (-0.5, 2, 2), (-0.8, 3, 2)):
        V = bessel.full_series(z)
        Vt = bessel.segment_series(z, M)
        N = 3 * r * M
        vc = correction.correction_first(correction.w_first(V, Vt), r, cutoff=N)
        chain = correction.second_round_chain(vc, Vt, r, V=V)
        gap = max(gap, chain.route_gap)
        for rp in (1, 2, 3):
            Np = 9 * r * rp * M
            vc2 = correction.correction_second(chain.Wp, rp, cutoff=Np)
            if (z, M, r, rp) == (-0.8, 2, 3, 2):
                residual = correction.verify_second(chain.Vtp, vc2, rp, z, r)
            spec = bessel.SegmentSpec(z=z, M=M, r=r, r_prime=rp)
            b = planner.lemma_bounds(spec, N, Np)
            s2_ratio = max(s2_ratio, vc2.s_total / (2 * b.lemma6_s))
            tail = sum(abs(a) for m, a in vc2.series.items() if abs(m) > Np)
            tail2_ratio = max(tail2_ratio, tail / (2 * b.lemma7_tail))
    return residual, gap, s2_ratio, tail2_ratio


def _lambert_w(x: float) -> float:
    """Principal branch of ``w e^w = x`` for ``x > 0`` by bisection."""
    lo, hi = 0.0, max(1.0, x)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scaling_table(eps: float = 1e-4, taus=(2, 4, 8, 16, 32)) -> list[tuple[float, int, int]]:
    return [(tau, planner.plan_single(tau, eps).spec.M, planner.plan_double(tau, eps).spec.M)
            for tau in taus]


def single_growth_limit(tau: float) -> float:
    """``c log tau / log log tau + c'`` with ``c = 2``, ``c' = 4``."""
    return 4.0 + 2.0 * math.log(tau) / max(1.0, math.log(math.log(tau))) if tau > 1 else 4.0


def suite_planner(rng: np.random.Generator) -> list[Check]:
    consts = planner.solve_constants()
    r1, r2 = consts.residuals
    lw = abs(consts.zeta - 1.0 / (2.0 * _lambert_w(1.0 / math.e)))
    violations = 0
    for tau in (0.5, 1, 2, 4, 8, 16):
        for eps in (1e-3, 1e-6, 1e-10):
            for alg in planner.ALGORITHMS:
                violations += len(planner.verify_plan(planner.make_plan(alg, tau, eps), eps))
    table = scaling_table()
    growth = max(M1 - single_growth_limit(tau) for tau, M1, _ in table)
    order = max(M2 - M1 for _, M1, M2 in table)
    return [
        _le("zeta residual", abs(r1), 1e-12),
        _le("zeta' residual", abs(r2), 1e-12),
        _le("zeta vs 1/(2 W(1/e))", lw, 1e-9),
        _le("plan re-certification violations", violations, 0),
        _le("single-round M growth excess", growth, 0.0),
        _le("double-round M - single-round M", order, 0.0),
    ]


_SUITES: dict[str, Callable[[np.random.Generator], list[Check]]] = {
    "series": suite_series,
    "bessel": suite_bessel,
    "walk": suite_walk,
    "correction": suite_correction,
    "planner": suite_planner,
}


def run_verify(suite: str, seed: int = 0) -> list[tuple[str, Check]]:
    if suite == "all":
        names = SUITES
    elif suite in _SUITES:
        names = (suite,)
    else:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES + ('all',)}")
    out = []
    for name in names:
        rng = np.random.default_rng(seed)
        out += [(name, c) for c in _SUITES[name](rng)]
    return out
