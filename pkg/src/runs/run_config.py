import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

import config
from src.catalog.descriptor import SystemDescriptor
from src.rates.parameters import RateSettings, SeedSettings

logger = logging.getLogger(__name__)

Command = Literal['analyze', 'eht', 'grow', 'unstable', 'close', 'report']


class Thresholds(BaseModel):
    beta_bar: Optional[float] = Field(None, ge=1.0)
    theta_bar: float = Field(0.1, gt=0.0)


class GrowSettings(BaseModel):
    """Seed manifold ('zero' or a dump path) and the index range to push over"""
    manifold: str = 'zero'
    start: Optional[int] = None
    steps: int = 10
    radius: float = 0.1
    kappa: float = 1.0


class UnstableSettings(BaseModel):
    radius: float = 0.1
    window: int = config.UNSTABLE_SETTINGS['k_max']
    family_length: int = config.UNSTABLE_SETTINGS['family_length']


class SegmentSettings(BaseModel):
    """Orbit segment x, ..., f^p x and the certificate constants"""
    point: Optional[List[float]] = None
    p: int
    chi_hat_u: float
    chi_hat_s: float
    L: Optional[float] = None
    radius: float = config.CLOSING_SETTINGS['radius']
    chi_bar_u: Optional[float] = None


class RunConfig(BaseModel):
    """One batch run: which system, which command, and every constant it needs"""
    system: Union[SystemDescriptor, str]
    command: Optional[Command] = None
    rates: Optional[RateSettings] = None
    chi_hat: Optional[float] = None
    thresholds: Thresholds = Thresholds()
    seeds: Optional[SeedSettings] = None
    window: Optional[int] = Field(None, gt=0)
    out: str = config.OUTPUT_DIR
    seed: int = config.RANDOM_SEED
    tolerances: Dict[str, float] = {}
    strict_class: bool = False
    series_path: Optional[str] = None
    grow: GrowSettings = GrowSettings()
    unstable: UnstableSettings = UnstableSettings()
    segment: Optional[SegmentSettings] = None

    def descriptor(self, base_dir: Optional[Path] = None) -> SystemDescriptor:
        if isinstance(self.system, SystemDescriptor):
            return self.system
        path = Path(self.system)
        if not path.is_absolute() and base_dir is not None and not path.exists():
            path = base_dir / path
        return SystemDescriptor.load(path)

    @classmethod
    def load(cls, path) -> 'RunConfig':
        cfg = cls.model_validate_json(Path(path).read_text())
        logger.info("Loaded run configuration %s", path)
        return cfg
