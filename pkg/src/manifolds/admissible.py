import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

import config
from src.errors import OutOfDomain, PreconditionViolated
from src.manifolds.chebyshev import (barycentric_weights, chebyshev_nodes, differentiation_matrix,
                                     interpolation_matrix, tensor_differentiate, tensor_grid,
                                     tensor_interpolate)

logger = logging.getLogger(__name__)


class ClassParams(BaseModel):
    """Parameters (r, tau, sigma, kappa, gamma, alpha) of an admissible class"""
    r: float
    tau: float = 0.0
    sigma: float = 0.0
    kappa: float = 0.0
    gamma: Optional[float] = None
    alpha: float = 1.0

    @property
    def derivative_bound(self) -> float:
        return self.sigma + self.kappa * self.r ** self.alpha


class ManifoldDump(BaseModel):
    k: int
    s_dim: int
    r: float
    degree: int
    nodes: List[float]
    values: List[List[float]]
    derivs: List[List[List[float]]]
    params: Optional[ClassParams] = None


@dataclass
class ClassReport:
    offset: float
    tilt: float
    holder: float
    max_derivative: float
    flags: Dict[str, bool] = field(default_factory=dict)

    @property
    def member(self) -> bool:
        return all(self.flags.values())

    def failed(self) -> List[str]:
        return [name for name, ok in self.flags.items() if not ok]


def _operator_norms(mats: np.ndarray) -> np.ndarray:
    """Spectral norms of a stack of (s x k) matrices"""
    if mats.shape[1] == 0 or mats.shape[2] == 0:
        return np.zeros(mats.shape[0])
    return np.linalg.svd(mats, compute_uv=False)[:, 0]


@dataclass(frozen=True, eq=False)
class AdmissibleManifold:
    """
    Graph of psi: B^u(r) -> E^s stored as values and derivatives on a
    Chebyshev grid over [-r, r]^k (tensor grid for k >= 2).

    values has shape (n_nodes, s_dim), derivs (n_nodes, s_dim, k).
    """
    u_dim: int
    s_dim: int
    radius: float
    degree: int
    values: np.ndarray
    derivs: np.ndarray
    params: Optional[ClassParams] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1, self.s_dim)
        derivs = np.asarray(self.derivs, dtype=float).reshape(-1, self.s_dim, self.u_dim)
        if len(values) != (self.degree + 1) ** self.u_dim or len(derivs) != len(values):
            raise PreconditionViolated("Node data does not match the grid size")
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'derivs', derivs)

    @property
    def axis_nodes(self) -> np.ndarray:
        return chebyshev_nodes(self.degree, self.radius)

    @property
    def nodes(self) -> np.ndarray:
        """Grid points, shape (n_nodes, k)"""
        return tensor_grid(self.axis_nodes, self.u_dim)

    def inside(self, tol: float = 1e-12) -> np.ndarray:
        """Mask of grid points inside the closed ball of radius r"""
        return np.linalg.norm(self.nodes, axis=1) <= self.radius * (1.0 + tol)

    @staticmethod
    def default_degree(u_dim: int) -> int:
        return config.CHEBYSHEV_DEGREE if u_dim == 1 else config.CHEBYSHEV_DEGREE_MULTI

    @classmethod
    def from_function(cls, func: Callable, dfunc: Callable, u_dim: int, s_dim: int,
                      radius: float, degree: Optional[int] = None,
                      params: Optional[ClassParams] = None) -> 'AdmissibleManifold':
        """Sample psi and D psi at the grid; func(v) -> (s,), dfunc(v) -> (s, k)"""
        degree = cls.default_degree(u_dim) if degree is None else degree
        points = tensor_grid(chebyshev_nodes(degree, radius), u_dim)
        values = np.asarray([np.atleast_1d(func(v)) for v in points], dtype=float)
        derivs = np.asarray([np.asarray(dfunc(v), dtype=float).reshape(s_dim, u_dim)
                             for v in points])
        return cls(u_dim, s_dim, radius, degree, values.reshape(-1, s_dim), derivs, params)

    @classmethod
    def zero(cls, u_dim: int, s_dim: int, radius: float, degree: Optional[int] = None,
             params: Optional[ClassParams] = None) -> 'AdmissibleManifold':
        degree = cls.default_degree(u_dim) if degree is None else degree
        n = (degree + 1) ** u_dim
        return cls(u_dim, s_dim, radius, degree, np.zeros((n, s_dim)),
                   np.zeros((n, s_dim, u_dim)), params)

    def _check_domain(self, points: np.ndarray):
        norms = np.linalg.norm(points, axis=1)
        worst = int(np.argmax(norms)) if len(norms) else 0
        if len(norms) and norms[worst] > self.radius * (1.0 + 1e-12):
            raise OutOfDomain(float(norms[worst]), self.radius)

    def _interpolate(self, data: np.ndarray, points: np.ndarray) -> np.ndarray:
        weights = barycentric_weights(self.degree)
        if self.u_dim == 1:
            basis = interpolation_matrix(points[:, 0], self.axis_nodes, weights)
            return np.tensordot(basis, data, axes=(1, 0))
        return tensor_interpolate(points, self.axis_nodes, weights, data)

    def evaluate(self, v, check: bool = True) -> np.ndarray:
        """psi(v) for one point (k,) or a batch (m, k)"""
        points = np.asarray(v, dtype=float)
        single = points.ndim == 0 or (points.ndim == 1 and points.size == self.u_dim)
        points = points.reshape(-1, self.u_dim)
        if check:
            self._check_domain(points)
        out = self._interpolate(self.values, points)
        return out[0] if single else out

    def derivative(self, v, check: bool = True) -> np.ndarray:
        """D psi(v), shape (s, k) for one point or (m, s, k) for a batch"""
        points = np.asarray(v, dtype=float)
        single = points.ndim == 0 or (points.ndim == 1 and points.size == self.u_dim)
        points = points.reshape(-1, self.u_dim)
        if check:
            self._check_domain(points)
        out = self._interpolate(self.derivs, points)
        return out[0] if single else out

    def second_derivative(self, v) -> np.ndarray:
        """psi''(v) for k = 1, from the derivative interpolant"""
        if self.u_dim != 1:
            raise PreconditionViolated("second_derivative is defined for one unstable dimension")
        dmat = differentiation_matrix(self.axis_nodes, barycentric_weights(self.degree))
        second = np.tensordot(dmat, self.derivs[:, :, 0], axes=(1, 0))
        point = np.asarray(v, dtype=float).reshape(-1, 1)
        self._check_domain(point)
        return self._interpolate(second, point)[0]

    def consistency_error(self) -> float:
        """Max mismatch between the spectral derivative of the values and the stored derivs"""
        if self.s_dim == 0:
            return 0.0
        dmat = differentiation_matrix(self.axis_nodes, barycentric_weights(self.degree))
        errors = []
        for axis in range(self.u_dim):
            spectral = tensor_differentiate(self.values, dmat, self.u_dim, axis)
            errors.append(np.abs(spectral - self.derivs[:, :, axis]).max())
        scale = max(1.0, float(np.abs(self.derivs).max()))
        return float(max(errors) / scale)

    def holder_seminorm(self, alpha: float, refine: bool = True) -> float:
        """
        Lower estimate of |D psi|_alpha from all pairs of grid points in the
        ball, plus a near-diagonal partner for every such point.
        """
        if self.s_dim == 0:
            return 0.0
        mask = self.inside()
        points, derivs = self.nodes[mask], self.derivs[mask]
        best = 0.0
        if len(points) > 1:
            i, j = np.triu_indices(len(points), k=1)
            dist = np.linalg.norm(points[i] - points[j], axis=1)
            quotients = _operator_norms(derivs[i] - derivs[j]) / dist ** alpha
            best = float(quotients.max())
        if refine:
            h = 1e-4 * self.radius
            direction = np.zeros(self.u_dim)
            direction[0] = 1.0
            partners = points - h * np.sign(points[:, :1] + 1e-300) * direction
            near = self.derivative(partners, check=False)
            quotients = _operator_norms(near - derivs) / h ** alpha
            best = max(best, float(quotients.max()))
        return best

    def class_check(self, params: ClassParams, slack: Optional[float] = None) -> ClassReport:
        """
        Test |psi(0)| <= tau, |D psi(0)| <= sigma, |D psi|_alpha <= kappa (1 + slack),
        and |D psi| <= sigma + kappa r^alpha (and <= gamma when given) on the ball.
        """
        slack = config.TOLERANCES['class_slack'] if slack is None else slack
        tight = 1e-12
        zero = np.zeros(self.u_dim)
        offset = float(np.linalg.norm(self.evaluate(zero))) if self.s_dim else 0.0
        tilt = float(_operator_norms(self.derivative(zero)[np.newaxis])[0])
        holder = self.holder_seminorm(params.alpha)
        r = min(params.r, self.radius)
        inside = np.linalg.norm(self.nodes, axis=1) <= r * (1.0 + tight)
        max_deriv = float(_operator_norms(self.derivs[inside]).max()) if inside.any() else 0.0

        flags = {
            'offset': offset <= params.tau * (1.0 + tight) + tight,
            'tilt': tilt <= params.sigma * (1.0 + tight) + tight,
            'holder': holder <= params.kappa * (1.0 + slack) + tight,
            'derivative': max_deriv <= params.sigma + params.kappa * r ** params.alpha * (1.0 + slack) + tight,
        }
        if params.gamma is not None:
            flags['gamma'] = max_deriv <= params.gamma * (1.0 + tight) + tight
        return ClassReport(offset, tilt, holder, max_deriv, flags)

    def with_params(self, params: Optional[ClassParams]) -> 'AdmissibleManifold':
        return AdmissibleManifold(self.u_dim, self.s_dim, self.radius, self.degree,
                                  self.values, self.derivs, params)

    def dump(self) -> ManifoldDump:
        return ManifoldDump(k=self.u_dim, s_dim=self.s_dim, r=self.radius, degree=self.degree,
                            nodes=self.axis_nodes.tolist(), values=self.values.tolist(),
                            derivs=self.derivs.tolist(), params=self.params)

    def to_json(self) -> str:
        return self.dump().model_dump_json(indent=2)

    @classmethod
    def load(cls, data) -> 'AdmissibleManifold':
        """From a ManifoldDump, a dict or a JSON string"""
        if isinstance(data, str):
            data = ManifoldDump.model_validate_json(data)
        elif isinstance(data, dict):
            data = ManifoldDump.model_validate(data)
        n = (data.degree + 1) ** data.k
        values = np.asarray(data.values, dtype=float).reshape(n, data.s_dim)
        derivs = np.asarray(data.derivs, dtype=float).reshape(n, data.s_dim, data.k)
        return cls(data.k, data.s_dim, data.r, data.degree, values, derivs, data.params)


def probe_grid(u_dim: int, radius: float, degree: int) -> np.ndarray:
    """Uniform grid at four times the node density, restricted to the ball"""
    axis = np.linspace(-radius, radius, 4 * degree + 1)
    points = tensor_grid(axis, u_dim)
    return points[np.linalg.norm(points, axis=1) <= radius * (1.0 + 1e-12)]


def c0_distance(m1: AdmissibleManifold, m2: AdmissibleManifold,
                radius: Optional[float] = None) -> float:
    """max |psi_1 - psi_2| over a probe grid of the common (or given) ball"""
    if m1.u_dim != m2.u_dim or m1.s_dim != m2.s_dim:
        raise PreconditionViolated("Manifolds live in different splittings")
    r = min(m1.radius, m2.radius)
    r = r if radius is None else min(r, radius)
    if m1.s_dim == 0:
        return 0.0
    points = probe_grid(m1.u_dim, r, max(m1.degree, m2.degree))
    diff = m1.evaluate(points, check=False) - m2.evaluate(points, check=False)
    return float(np.linalg.norm(diff, axis=1).max())
