"""Derived nonlinear rates and parameter sequences"""

from .derived_rates import DerivedRates, derived_rates
from .parameters import (ConditionReport, ParamSeq, RateSettings, SeedSettings,
                         build_params_theorem_d, check_hp1_conditions, check_theorem_c, hat_r,
                         search_xi_gamma, suggest_seeds)

__all__ = [
    'DerivedRates', 'derived_rates',
    'ConditionReport', 'ParamSeq', 'RateSettings', 'SeedSettings',
    'build_params_theorem_d', 'check_hp1_conditions', 'check_theorem_c', 'hat_r',
    'search_xi_gamma', 'suggest_seeds',
]
