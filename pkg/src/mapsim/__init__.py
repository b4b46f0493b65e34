"""Simulation and statistical verification of Markov-modulated additive processes."""

from .jumplaws import Gaussian, JumpLaw, PointMass, ShiftedPareto, TwoPoint, make_law
from .model import (HypothesisViolation, LimitConstants, LocalJumps,
                    MapCharacteristics, TransitionJump, bracket_rate,
                    compensator_rate, limit_constants, lindeberg_check, mu_d,
                    truncated_drift, validate_hypotheses)
from .modulator import (ModulatorPath, ModulatorSpec, StationaryMeasure,
                        darling_kac_estimate, occupation_functional,
                        simulate_modulator, stationary_measure)
from .reports import TestReport, recompute_verdict
from .simulate import (ConditionalEnsemble, MapPath, TestFunction,
                       compensation_formula_check, conditional_charfn,
                       conditional_ensemble, simulate_ensemble, simulate_map,
                       squared_capped, transition_indicator)
from .subordination import (InversePath, SubordinatorSpec, sample_inverse,
                            sample_stable_subordinator, sample_subordinated_bm)
from .verify import (CltComparison, LindebergFailure, conditional_charfn_check,
                     ks_two_sample, structural_suite, verify_clt,
                     verify_ratio_ergodic, verify_slln, verify_z_convergence)

__version__ = "0.1.0"

__all__ = [
    "ConditionalEnsemble", "CltComparison", "Gaussian", "HypothesisViolation",
    "InversePath", "JumpLaw", "LimitConstants", "LindebergFailure", "LocalJumps",
    "MapCharacteristics", "MapPath", "ModulatorPath", "ModulatorSpec",
    "PointMass", "ShiftedPareto", "StationaryMeasure", "SubordinatorSpec",
    "TestFunction", "TestReport", "TransitionJump", "TwoPoint", "bracket_rate",
    "compensation_formula_check", "compensator_rate", "conditional_charfn",
    "conditional_charfn_check", "conditional_ensemble", "darling_kac_estimate",
    "ks_two_sample", "limit_constants", "lindeberg_check", "make_law", "mu_d",
    "occupation_functional", "recompute_verdict", "sample_inverse",
    "sample_stable_subordinator", "sample_subordinated_bm", "simulate_ensemble",
    "simulate_map", "simulate_modulator", "squared_capped", "stationary_measure",
    "structural_suite", "transition_indicator", "truncated_drift",
    "validate_hypotheses", "verify_clt", "verify_ratio_ergodic", "verify_slln",
    "verify_z_convergence",
]
