"""Corrected quantum-walk Hamiltonian simulation, verified numerically at desk scale."""

from .bessel import SegmentSpec, bessel_j, full_series, segment_series, select_z, tail_sum
from .correction import correction_first, correction_second, oaa_series, second_round_chain, w_first
from .hamiltonian import QueryLedger, SparseHamiltonian, load, random_sparse, save
from .pipeline import ExperimentConfig, ExperimentReport, run_simulate, run_sweep
from .planner import lemma_bounds, plan_double, plan_single, solve_constants
from .series import LaurentSeries, s_norm
from .walk import build_walk, effective_operator, lcu_apply, oaa_apply, verify_spectral_map

__version__ = "0.1.0"
