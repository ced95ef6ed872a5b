import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.catalog.builtins import BUILTINS, builtin
from src.errors import PreconditionViolated, UnknownBuiltin
from src.germs.germ import Germ, GermSequence
from src.germs.splitting import ConeField, Splitting, cones_to_splitting

logger = logging.getLogger(__name__)


class PolynomialTerm(BaseModel):
    """coef * prod_j x_j^powers[j]"""
    coef: float
    powers: List[int]


class BasesSpec(BaseModel):
    """Constant bases, one list of coordinates per spanning vector"""
    unstable: List[List[float]]
    stable: List[List[float]] = []


class ConeSpec(BaseModel):
    unstable: List[List[float]]
    stable: List[List[float]] = []
    zeta_u: float = 0.5
    zeta_s: float = 0.5


class PolynomialMap:
    """Evaluates a polynomial map and its Jacobian from coefficient tables"""

    def __init__(self, dim: int, table: List[List[PolynomialTerm]]):
        self.dim = dim
        self.coefs = [np.array([t.coef for t in row], dtype=float) for row in table]
        self.powers = [np.array([t.powers for t in row], dtype=int).reshape(-1, dim) for row in table]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([float(c @ np.prod(x ** p, axis=1)) for c, p in zip(self.coefs, self.powers)])

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.dim, self.dim))
        for i, (c, p) in enumerate(zip(self.coefs, self.powers)):
            for j in range(self.dim):
                lowered = p.copy()
                lowered[:, j] = np.maximum(p[:, j] - 1, 0)
                out[i, j] = float((c * p[:, j]) @ np.prod(x ** lowered, axis=1))
        return out


class SystemDescriptor(BaseModel):
    """
    A test system: a builtin by name with its parameters, or a polynomial
    map given by one coefficient table per output coordinate.
    """
    name: str
    params: Dict[str, Any] = {}
    dimension: Optional[int] = None
    alpha: float = Field(1.0, gt=0.0, le=1.0)
    n_min: int = 0
    n_max: Optional[int] = None
    polynomial: Optional[List[List[PolynomialTerm]]] = None
    box: float = 0.5
    splitting: Union[Literal['auto-eigen', 'builtin'], BasesSpec, ConeSpec, None] = None

    @model_validator(mode='after')
    def _check_kind(self):
        if self.name == 'polynomial':
            if not self.polynomial or self.dimension is None:
                raise ValueError("polynomial systems need 'dimension' and 'polynomial'")
            if len(self.polynomial) != self.dimension:
                raise ValueError("one coefficient table per output coordinate")
            for row in self.polynomial:
                for term in row:
                    if len(term.powers) != self.dimension or min(term.powers, default=0) < 0:
                        raise ValueError(f"bad monomial exponents {term.powers}")
        return self

    def _polynomial_sequence(self) -> GermSequence:
        poly = PolynomialMap(self.dimension, self.polynomial)
        germ = Germ.centered(self.dimension, poly, poly.jacobian, -self.box, self.box,
                             label='polynomial')
        n_max = self.n_max if self.n_max is not None else self.n_min + int(self.params.get('length', 100)) - 1
        return GermSequence(lambda n: germ, self.n_min, n_max, self.alpha, label='polynomial')

    def _splitting(self, seq: GermSequence, default: Optional[Splitting]) -> Splitting:
        spec = self.splitting
        if isinstance(spec, BasesSpec):
            eu = np.asarray(spec.unstable, dtype=float).T.reshape(seq.dim, -1)
            es = np.asarray(spec.stable, dtype=float).T.reshape(seq.dim, -1)
            return Splitting.constant(eu, es, seq.n_min, seq.n_max + 1)
        if isinstance(spec, ConeSpec):
            eu = np.asarray(spec.unstable, dtype=float).T.reshape(seq.dim, -1)
            es = np.asarray(spec.stable, dtype=float).T.reshape(seq.dim, -1)
            cones = ConeField.constant(eu, es, spec.zeta_u, spec.zeta_s, seq.n_min, seq.n_max + 1)
            return cones_to_splitting(seq, cones)
        if spec == 'auto-eigen' or default is None:
            return Splitting.auto_eigen(seq)
        return default

    def instantiate(self) -> Tuple[GermSequence, Splitting]:
        if self.name == 'polynomial':
            seq = self._polynomial_sequence()
            return seq, self._splitting(seq, None)
        if self.name not in BUILTINS:
            raise UnknownBuiltin(self.name)
        seq, split = builtin(self.name, self.params, self.n_min, self.n_max, self.alpha)
        if self.dimension is not None and self.dimension != seq.dim:
            raise PreconditionViolated(f"{self.name} has dimension {seq.dim}, not {self.dimension}")
        return seq, self._splitting(seq, split)

    @classmethod
    def load(cls, path) -> 'SystemDescriptor':
        return cls.model_validate_json(Path(path).read_text())

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2, exclude_none=True))
        logger.info("Wrote system descriptor %s", path)
        return path


SAMPLE_DESCRIPTORS = [
    SystemDescriptor(name='diag_linear', params={'mu': 2.0, 'lam': 0.5}),
    SystemDescriptor(name='alt_3_half'),
    SystemDescriptor(name='pliss_blocks'),
    SystemDescriptor(name='quad_hyperbolic'),
    SystemDescriptor(name='cat_germ', params={'point': [8 / 11, 5 / 11], 'length': 5}),
    SystemDescriptor(name='uniform_setting', params={'mu': 2.0, 'lam': 0.5, 'eps': 0.05}),
    SystemDescriptor(
        name='polynomial', dimension=2,
        polynomial=[[PolynomialTerm(coef=2.0, powers=[1, 0]), PolynomialTerm(coef=1.0, powers=[0, 2])],
                    [PolynomialTerm(coef=0.5, powers=[0, 1]), PolynomialTerm(coef=1.0, powers=[2, 0])]],
        splitting=BasesSpec(unstable=[[1.0, 0.0]], stable=[[0.0, 1.0]]),
    ),
]
