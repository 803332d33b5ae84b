"""Discrete versus continuous variance-swap strikes under stochastic volatility."""

from .analysis import (
    PropertyLedger,
    SweepResult,
    SweepRow,
    convergence_sweep,
    lemma_and_bound_mc_suite,
    property_audit,
    sign_law_test,
    write_ledger_csv,
    write_sweep_csv,
)
from .mc import (
    McEstimate,
    McRun,
    Scheme,
    SimConfig,
    SimulationError,
    estimate_C,
    estimate_gamma,
    estimate_gamma_via_transform,
    estimate_Kc,
    estimate_Kd,
    lemma1_check,
    simulate,
    simulate_variance_path,
)
from .models import (
    ConstVol,
    DomainError,
    Heston,
    HullWhite,
    ModelSpec,
    SwapContract,
    ThreeHalves,
    UnsupportedModel,
    ValidationError,
    ValidationReport,
    make_model,
    transform_pair,
    validate,
)
from .oracles import QuadratureError, kernel_for, quad_C, quad_gamma, quad_Kc, quad_m4_bound
from .strikes import (
    UNDEFINED,
    StrikeReport,
    critical_rho,
    decomposition,
    heston_C,
    heston_gamma,
    heston_Kc,
    hw_C,
    hw_gamma,
    hw_Kc,
    kd_excess,
    strike_report,
)

__all__ = [
    "ConstVol", "convergence_sweep", "critical_rho", "decomposition", "DomainError", "estimate_C",
    "estimate_gamma", "estimate_gamma_via_transform", "estimate_Kc", "estimate_Kd", "Heston",
    "heston_C", "heston_gamma", "heston_Kc", "HullWhite", "hw_C", "hw_gamma", "hw_Kc", "kd_excess",
    "kernel_for", "lemma1_check", "lemma_and_bound_mc_suite", "make_model", "McEstimate", "McRun",
    "ModelSpec", "property_audit", "PropertyLedger", "quad_C", "quad_gamma", "quad_Kc",
    "quad_m4_bound", "QuadratureError", "Scheme", "sign_law_test", "SimConfig", "simulate",
    "simulate_variance_path", "SimulationError", "strike_report", "StrikeReport", "SwapContract",
    "SweepResult", "SweepRow", "ThreeHalves", "transform_pair", "UNDEFINED", "UnsupportedModel",
    "validate", "ValidationError", "ValidationReport", "write_ledger_csv", "write_sweep_csv",
]
