"""Effective hyperbolicity diagnostics"""

from .effective import (BetaDensityReport, EffectiveReport, EffectiveSeries, effective_report,
                        effective_series, eht_detect, eht_detect_bruteforce, hyperbolic_times,
                        m_sequence, m_sequence_bruteforce, m_upper_bound, series_frame,
                        shortfall_columns, verify_via_beta_density)
from .lyapunov import lyapunov_exponents
from .pliss import PlissResult, pliss, pliss_bruteforce

__all__ = [
    'BetaDensityReport', 'EffectiveReport', 'EffectiveSeries', 'effective_report',
    'effective_series', 'eht_detect', 'eht_detect_bruteforce', 'hyperbolic_times',
    'm_sequence', 'm_sequence_bruteforce', 'm_upper_bound', 'series_frame', 'shortfall_columns',
    'verify_via_beta_density',
    'lyapunov_exponents',
    'PlissResult', 'pliss', 'pliss_bruteforce',
]
