"""Run configuration and output storage for the command-line front end"""

from .run_config import (GrowSettings, RunConfig, SegmentSettings, Thresholds,
                         UnstableSettings)
from .run_store import RunStore

__all__ = ['GrowSettings', 'RunConfig', 'SegmentSettings', 'Thresholds', 'UnstableSettings',
           'RunStore']
