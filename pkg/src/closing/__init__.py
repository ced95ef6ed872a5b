"""Orbit-segment certificates and the closing procedure"""

from .periodic import PeriodicPointResult, ReturnMap, close_orbit, closing_epsilon
from .segment import (MS_ORIENTATION, SegmentReport, ceh_check, stable_shortfall,
                      stable_shortfall_bruteforce)

__all__ = [
    'PeriodicPointResult', 'ReturnMap', 'close_orbit', 'closing_epsilon',
    'MS_ORIENTATION', 'SegmentReport', 'ceh_check', 'stable_shortfall',
    'stable_shortfall_bruteforce',
]
