"""End-to-end experiments: plan, compose the effective series, evaluate, account."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .bessel import full_series, segment_series
from .correction import (
    correction_first,
    correction_second,
    oaa_series,
    second_round_chain,
    w_first,
)
from .errors import ConsistencyError, ParameterError, PreconditionError, WalkcorrError
from .hamiltonian import QueryLedger, SparseHamiltonian, load, random_sparse
from .planner import ALGORITHMS, CORRECTED1, CORRECTED2, UNCORRECTED, SegmentPlan, make_plan
from .series import LaurentSeries, alternating_asymmetry, mul, power, s_norm
from .walk import build_walk, effective_operator, exact_evolution, shifted_phase

SEED_ENV = "WALKCORR_SEED"
CSV_COLUMNS = (
    "tau", "epsilon", "algorithm", "M", "r", "N", "r_prime", "N_prime",
    "walk_steps", "queries", "error_spectral", "pass", "error",
)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation request.

    ``hamiltonian`` is a file path or a ``(n, d, seed)`` generator triple
    (``seed`` may be ``None``, in which case ``WALKCORR_SEED`` or 0 is used).
    Exactly one of ``t`` and ``tau`` is given; with ``tau`` the time is
    ``tau / (X d)`` for the walk's ``X`` and ``d``.
    """

    hamiltonian: str | tuple
    epsilon: float
    algorithm: str = CORRECTED1
    t: float | None = None
    tau: float | None = None
    output: str | None = None

    def __post_init__(self):
        if (self.t is None) == (self.tau is None):
            raise ParameterError("give exactly one of t and tau")
        val = self.t if self.t is not None else self.tau
        if not math.isfinite(val) or val < 0:
            raise ParameterError(f"time must be finite and >= 0, got {val}")
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if not isinstance(self.hamiltonian, str):
            h = tuple(self.hamiltonian)
            if len(h) != 3:
                raise ParameterError("generator spec must be (n, d, seed)")
            object.__setattr__(self, "hamiltonian", h)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ParameterError("config entries must be JSON objects")
        h = doc.get("hamiltonian")
        if isinstance(h, dict):
            h = (h.get("n"), h.get("d"), h.get("seed"))
        elif isinstance(h, list):
            h = tuple(h)
        if h is None:
            raise ParameterError("config needs a 'hamiltonian' entry")
        try:
            return cls(hamiltonian=h, epsilon=float(doc["epsilon"]),
                       algorithm=doc.get("algorithm", CORRECTED1),
                       t=None if doc.get("t") is None else float(doc["t"]),
                       tau=None if doc.get("tau") is None else float(doc["tau"]),
                       output=doc.get("output"))
        except KeyError as exc:
            raise ParameterError(f"config missing {exc}") from None

    def describe_hamiltonian(self) -> str:
        if isinstance(self.hamiltonian, str):
            return self.hamiltonian
        n, d, seed = self.hamiltonian
        return f"random:{n},{d},{default_seed() if seed is None else seed}"


def resolve_hamiltonian(cfg: ExperimentConfig) -> SparseHamiltonian:
    if isinstance(cfg.hamiltonian, str):
        return load(Path(cfg.hamiltonian).read_text(encoding="utf-8"))
    n, d, seed = cfg.hamiltonian
    return random_sparse(int(n), int(d), default_seed() if seed is None else int(seed))


@dataclass
class ComposedSeries:
    """Final effective series for a plan plus the intermediate pieces."""

    final: LaurentSeries
    parts: dict[str, LaurentSeries]
    s_values: dict[str, float]

    @property
    def max_asymmetry(self) -> float:
        return max(alternating_asymmetry(F) for F in self.parts.values())


@lru_cache(maxsize=64)
def compose_series(plan: SegmentPlan) -> ComposedSeries:
    """Series in ``U`` realised by the circuit the plan describes."""
    if plan.trivial:
        one = LaurentSeries.one()
        return ComposedSeries(one, {"final": one}, {"final": 1.0})
    spec = plan.spec
    z, M, r = spec.z, spec.M, spec.r
    Vt = segment_series(z, M)
    Voaa = oaa_series(Vt)
    Voaa_r = power(Voaa, r)
    parts = {"Vt": Vt, "V_oaa": Voaa, "V_oaa^r": Voaa_r}
    s_values = {"Vt": s_norm(Vt)}
    if plan.algorithm == UNCORRECTED:
        parts["final"] = Voaa_r
        return ComposedSeries(Voaa_r, parts, s_values)

    V = full_series(z)
    W = w_first(V, Vt)
    vc = correction_first(W, r, cutoff=plan.N)
    stage1 = mul(vc.truncated, Voaa_r)
    parts.update({"W": W, "V_C": vc.series, "Vt_C": vc.truncated, "Vt'": stage1})
    s_values.update({"W": s_norm(W), "V_C": vc.s_total, "Vt_C": s_norm(vc.truncated)})
    _oaa_guard("Vt_C", s_values["Vt_C"])
    compound = oaa_series(stage1)
    parts["V_oaa'"] = compound
    if plan.algorithm == CORRECTED1:
        parts["final"] = compound
        return ComposedSeries(compound, parts, s_values)

    chain = second_round_chain(vc, Vt, r, V=V)
    vc2 = correction_second(chain.Wp, spec.r_prime, cutoff=plan.N_prime)
    stage2 = mul(vc2.truncated, power(compound, spec.r_prime))
    parts.update({"W'": chain.Wp, "Delta'": chain.Dp, "V_C'": vc2.series,
                  "Vt_C'": vc2.truncated, "Vt''": stage2})
    s_values.update({"W'": s_norm(chain.Wp), "V_C'": vc2.s_total,
                     "Vt_C'": s_norm(vc2.truncated)})
    _oaa_guard("Vt_C'", s_values["Vt_C'"])
    final = oaa_series(stage2)
    parts["final"] = final
    return ComposedSeries(final, parts, s_values)


def _oaa_guard(name: str, s: float) -> None:
    """Only the correction LCU carries a normalisation above 1.

    Each ``V_oaa`` factor is the flagged block of its own OAA circuit, so the
    outer OAA sees the block ``Vt_C V_oaa^r / s(Vt_C)``, padded to ``/ 2``.
    """
    if s > 2.0 + 1e-12:
        raise PreconditionError(f"s({name}) = {s:.6g} > 2; one-step OAA is not available")


def circuit_selects(plan: SegmentPlan) -> list[int]:
    """Ladder cutoffs of every ``select(U)`` in circuit order."""
    if plan.trivial:
        return []
    M, r = plan.spec.M, plan.spec.r
    segments = [M] * (3 * r)
    if plan.algorithm == UNCORRECTED:
        return segments
    compound = 3 * (segments + [plan.N])
    if plan.algorithm == CORRECTED1:
        return compound
    return 3 * (plan.spec.r_prime * compound + [plan.N_prime])


@dataclass
class ExperimentReport:
    algorithm: str
    hamiltonian: str
    n: int
    d: int
    t: float
    tau: float
    epsilon: float
    X: float
    shift: float
    plan: dict
    error_spectral: float | None = None
    walk_steps: int = 0
    oracle_queries: int = 0
    lcu_selects: int = 0
    predicted_queries: int = 0
    certified: dict | None = None
    max_asymmetry: float = 0.0
    s_values: dict = field(default_factory=dict)
    failure: str | None = None

    @property
    def passed(self) -> bool:
        return (self.failure is None and self.error_spectral is not None
                and self.error_spectral <= self.epsilon)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["pass"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _shell_report(cfg: ExperimentConfig, H: SparseHamiltonian | None) -> ExperimentReport:
    return ExperimentReport(
        algorithm=cfg.algorithm, hamiltonian=cfg.describe_hamiltonian(),
        n=H.n if H else -1, d=H.d if H else -1,
        t=cfg.t if cfg.t is not None else math.nan,
        tau=cfg.tau if cfg.tau is not None else math.nan,
        epsilon=cfg.epsilon, X=H.max_norm if H else math.nan, shift=0.0, plan={},
    )


def run_simulate(cfg: ExperimentConfig, H: SparseHamiltonian | None = None) -> ExperimentReport:
    """Plan, compose and evaluate one experiment.

    The ledger is charged per ``select(U)`` of the described circuit and is
    cross-checked against both the walk steps spent by
    :func:`effective_operator` and the planner's prediction.
    """
    if H is None:
        H = resolve_hamiltonian(cfg)
    rep = _shell_report(cfg, H)
    if H.max_norm == 0.0:
        # H = 0: identity evolution, no walk needed
        rep.t = cfg.t if cfg.t is not None else 0.0
        rep.tau = 0.0
        rep.error_spectral = 0.0
        return rep
    W = build_walk(H)
    if cfg.tau is not None:
        tau = cfg.tau
        t = tau / (W.X * W.d)
    else:
        t = cfg.t
        tau = W.tau(t)
    rep.t, rep.tau, rep.X, rep.d, rep.shift = t, tau, W.X, W.d, W.shift

    plan = make_plan(cfg.algorithm, tau, cfg.epsilon)
    rep.plan = plan.summary()
    rep.certified = plan.certified.as_dict() if plan.certified else None
    rep.predicted_queries = plan.predicted_queries
    comp = compose_series(plan)
    rep.s_values = dict(comp.s_values)
    rep.max_asymmetry = comp.max_asymmetry

    ledger = QueryLedger()
    for cutoff in circuit_selects(plan):
        ledger.record_select(cutoff)
    spent = QueryLedger()
    A = effective_operator(W, comp.final, spent) * shifted_phase(W, t)
    if not (ledger.walk_steps == spent.walk_steps == plan.predicted_queries // 4):
        raise ConsistencyError(
            f"walk-step accounting mismatch: circuit {ledger.walk_steps}, "
            f"evaluation {spent.walk_steps}, predicted {plan.predicted_queries // 4}"
        )
    rep.walk_steps = ledger.walk_steps
    rep.oracle_queries = ledger.oracle_queries
    rep.lcu_selects = len(ledger.lcu_selects)
    rep.error_spectral = float(np.linalg.norm(A - exact_evolution(H, t), 2))
    return rep


def _safe_simulate(cfg: ExperimentConfig) -> ExperimentReport:
    H = None
    try:
        H = resolve_hamiltonian(cfg)
        return run_simulate(cfg, H)
    except (WalkcorrError, OSError) as exc:
        rep = _shell_report(cfg, H)
        rep.failure = f"{type(exc).__name__}: {exc}"
        return rep


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def report_row(rep: ExperimentReport) -> list[str]:
    p = rep.plan
    vals = [rep.tau, rep.epsilon, rep.algorithm, p.get("M"), p.get("r"), p.get("N"),
            p.get("r_prime"), p.get("N_prime"), rep.walk_steps, rep.oracle_queries,
            rep.error_spectral, rep.passed, rep.failure]
    if rep.algorithm == UNCORRECTED and p:
        vals[5] = None
    return [_fmt(v) for v in vals]


def reports_to_csv(reports: list[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerow(report_row(rep))
    return buf.getvalue()


def run_sweep(grid: list[ExperimentConfig], workers: int = 1) -> tuple[str, list[ExperimentReport]]:
    """Run every config (failures become rows); rows keep input order."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_safe_simulate, grid))
    else:
        reports = [_safe_simulate(cfg) for cfg in grid]
    return reports_to_csv(reports), reports


def load_grid(text: str) -> list[ExperimentConfig]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"sweep config is not valid JSON: {exc}") from None
    if not isinstance(doc, list):
        raise ParameterError("sweep config must be a JSON array")
    return [ExperimentConfig.from_dict(d) for d in doc]


__all__ = [
    "CORRECTED1", "CORRECTED2", "UNCORRECTED", "ExperimentConfig", "ExperimentReport",
    "ComposedSeries", "compose_series", "circuit_selects", "run_simulate", "run_sweep",
    "reports_to_csv", "load_grid", "resolve_hamiltonian", "default_seed",
]
