"""Invariant post-randomization (PRAM) for protecting low-frequency categories."""

from .domain import (
    BlockPlan,
    FrequencyTable,
    OddsVector,
    PlanningError,
    RiskProfile,
    SimulationReport,
    TransitionMatrix,
    ValidationError,
    validate_frequency_table,
)
from .matrix import build_ifpr, verify_invariance, verify_row_stochastic
from .planner import min_block_size, plan_blocks, psi, reproduce_table1, solve_theta
from .risk import (
    check_appendix_criterion,
    odds_from_matrix,
    r1_closed_form_1,
    r1_exact,
    risk_profile,
    sigma_coeffs,
)

__version__ = "0.1.0"
