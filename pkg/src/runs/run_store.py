import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel

import config
from src.germs.linear_data import LinearData
from src.manifolds.admissible import AdmissibleManifold
from src.manifolds.graph_transform import TransformStepReport, steps_frame
from src.rates.parameters import ParamSeq

logger = logging.getLogger(__name__)


class RunStore:
    """Output directory of one run: CSV tables, JSON reports and manifold dumps"""

    def __init__(self, out_dir=config.OUTPUT_DIR):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / 'manifolds').mkdir(exist_ok=True)

    def _write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.out_dir / name
        frame.to_csv(path, index=False)
        logger.info("Wrote %s (%d rows)", path, len(frame))
        return path

    def _write_json(self, name: str, payload: str) -> Path:
        path = self.out_dir / name
        path.write_text(payload)
        logger.info("Wrote %s", path)
        return path

    def save_run(self, command: str, seed: int, settings: Optional[dict] = None,
                 tolerances: Optional[Dict[str, float]] = None) -> Path:
        """run.json: command, seed and effective settings"""
        record = {'command': command, 'seed': seed, 'tolerances': tolerances or {},
                  'settings': settings or {}}
        return self._write_json('run.json', json.dumps(record, indent=2, sort_keys=True, default=str))

    def save_linear_data(self, lin: LinearData) -> Path:
        return self._write_frame('linear_data.csv', lin.to_frame())

    def save_series(self, frame: pd.DataFrame) -> Path:
        return self._write_frame('effective_series.csv', frame)

    def save_params(self, params: ParamSeq) -> Path:
        return self._write_frame('params.csv', params.to_frame())

    def save_steps(self, reports: List[TransformStepReport]) -> Path:
        return self._write_frame('transform_steps.csv', steps_frame(reports))

    def save_table(self, name: str, frame: pd.DataFrame) -> Path:
        return self._write_frame(f"{name}.csv", frame)

    def save_report(self, name: str, report: BaseModel) -> Path:
        return self._write_json(f"{name}.json", report.model_dump_json(indent=2))

    def save_manifold(self, name: str, manifold: AdmissibleManifold) -> Path:
        return self._write_json(f"manifolds/{name}.json", manifold.to_json())

    def get_run(self) -> dict:
        return json.loads((self.out_dir / 'run.json').read_text())

    def get_linear_data(self) -> pd.DataFrame:
        return pd.read_csv(self.out_dir / 'linear_data.csv')

    def get_series(self) -> pd.DataFrame:
        return pd.read_csv(self.out_dir / 'effective_series.csv')

    def get_params(self) -> pd.DataFrame:
        return pd.read_csv(self.out_dir / 'params.csv')

    def get_steps(self) -> pd.DataFrame:
        return pd.read_csv(self.out_dir / 'transform_steps.csv')

    def get_table(self, name: str) -> pd.DataFrame:
        return pd.read_csv(self.out_dir / f"{name}.csv")

    def get_report(self, name: str) -> dict:
        return json.loads((self.out_dir / f"{name}.json").read_text())

    def get_manifold(self, name: str) -> AdmissibleManifold:
        return AdmissibleManifold.load((self.out_dir / 'manifolds' / f"{name}.json").read_text())

    def list_manifolds(self) -> List[str]:
        return sorted(p.stem for p in (self.out_dir / 'manifolds').glob('*.json'))

    def has(self, name: str) -> bool:
        return (self.out_dir / name).exists()
