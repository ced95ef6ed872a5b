import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import orth

import config
from src.closing.segment import SegmentReport
from src.errors import ContractionFail, IntersectionFail, PreconditionViolated
from src.germs.germ import GermSequence, compose, compose_jacobian
from src.germs.newton import newton_solve
from src.germs.split_map import SplitMap
from src.germs.splitting import Splitting, subspace_distance
from src.manifolds.admissible import AdmissibleManifold, c0_distance
from src.manifolds.graph_transform import transform_split

logger = logging.getLogger(__name__)


class PeriodicPointResult(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    z: List[float]
    z_chart: List[float]
    period: int
    residual: float
    distance: float
    eigen_moduli: List[float]
    subspace_distances: Dict[str, float]
    hyperbolic: bool
    margin: float
    wu_iterations: int = 0
    ws_iterations: int = 0
    wu_ratios: List[float] = []
    ws_ratios: List[float] = []
    newton_history: List[float] = []
    epsilon: float
    endpoint_within_epsilon: Optional[bool] = None
    p0_satisfied: Optional[bool] = None


class ReturnMap:
    """
    Phi(y) = T F_{0,p}(y) + d in the chart at x, where d is the lift of
    f^p x - x and T re-expresses chart coordinates at f^p x at x.
    Fixed points of Phi are the period-p points near x.
    """

    def __init__(self, seq: GermSequence, p: int, offset=None, frame_change=None):
        self.seq = seq
        self.start = seq.n_min
        self.p = p
        self.dim = seq.dim
        self.offset = np.zeros(self.dim) if offset is None else np.asarray(offset, dtype=float)
        self.change = np.eye(self.dim) if frame_change is None else np.asarray(frame_change, dtype=float)
        self._change_inv = np.linalg.inv(self.change)
        self._inverses = None

    def __call__(self, y) -> np.ndarray:
        return self.change @ compose(self.seq, self.start, self.start + self.p, y) + self.offset

    def jacobian(self, y) -> np.ndarray:
        return self.change @ compose_jacobian(self.seq, self.start, self.start + self.p, y)

    def inverse(self, y) -> np.ndarray:
        if self._inverses is None:
            self._inverses = [self.seq[n].inverse() for n in range(self.start, self.start + self.p)]
        x = self._change_inv @ (np.asarray(y, dtype=float) - self.offset)
        for inv in reversed(self._inverses):
            x = inv(x)
        return x

    def inverse_jacobian(self, y) -> np.ndarray:
        return np.linalg.inv(self.jacobian(self.inverse(y)))


def _fixed_graph(sm: SplitMap, radius: float, tol: float, label: str) -> tuple:
    """Iterate the graph transform of sm from the zero graph to its fixed point"""
    m = AdmissibleManifold.zero(sm.u_dim, sm.s_dim, radius)
    if sm.s_dim == 0:
        return m, 0, []
    predicted = float(np.linalg.norm(sm.B, 2)) if sm.B.size else 0.0
    if predicted >= 1.0:
        raise ContractionFail(0, np.inf)
    distances = []
    limit = None
    iterations = 0
    while True:
        image, _ = transform_split(sm, m, radius)
        iterations += 1
        distance = c0_distance(image, m)
        distances.append(distance)
        m = image
        if distance < tol:
            break
        if limit is None:
            steps = np.log(tol / distance) / np.log(max(predicted, 1e-300)) if predicted > 0 else 1.0
            limit = 3 * max(1, int(np.ceil(steps))) + 1
        if iterations >= limit:
            raise ContractionFail(iterations, distance)
    ratios = [b / a for a, b in zip(distances[:-1], distances[1:]) if a > 0]
    if ratios and max(ratios) > 2.0 * predicted:
        logger.warning("%s graph iteration contracts by %.3g, predicted %.3g",
                       label, max(ratios), predicted)
    return m, iterations, ratios


def _eigenspace(mat: np.ndarray, unstable: bool) -> np.ndarray:
    values, vectors = np.linalg.eig(mat)
    mask = np.abs(values) > 1.0 if unstable else np.abs(values) < 1.0
    cols = vectors[:, mask]
    if cols.shape[1] == 0:
        return np.zeros((mat.shape[0], 0))
    return orth(np.hstack([cols.real, cols.imag]))


def closing_epsilon(report: SegmentReport, radius: float) -> float:
    """Largest 1e-2 2^{-j} with room to re-center B(2 hat r) into B(hat r), hat r = r e^{-M^u}/2"""
    target = 0.5 * radius * np.exp(-report.M_u)
    eps = config.CLOSING_SETTINGS['epsilon_start']
    while eps > target:
        eps *= 0.5
    return eps


def close_orbit(seq: GermSequence, split: Splitting, report: SegmentReport, chart=None,
                radius: Optional[float] = None, tol: Optional[float] = None,
                margin: Optional[float] = None, chi_bar_u: Optional[float] = None,
                require_verdict: bool = True) -> PeriodicPointResult:
    """
    Locate the hyperbolic period-p point near x for a certified segment.

    W^u is the fixed graph of the transform induced by the return map, W^s
    the fixed graph for its inverse with the roles of the subspaces swapped.
    Their intersection seeds a Newton refinement of Phi(y) = y.
    """
    if require_verdict and not report.verdict:
        raise PreconditionViolated("Segment certificate fails: "
                                   + ', '.join(k for k, v in report.verdicts.items() if not v))
    radius = config.CLOSING_SETTINGS['radius'] if radius is None else radius
    tol = config.TOLERANCES['closing_c0'] if tol is None else tol
    margin = config.CLOSING_SETTINGS['hyperbolicity_margin'] if margin is None else margin
    p = report.p
    phi = ReturnMap(seq, p, report.offset, report.frame_change)
    eu, es = split.at(seq.n_min)
    k, s = eu.shape[1], es.shape[1]
    frame = np.hstack([eu, es])

    ws_iterations, ws_ratios = 0, []
    if s and k:
        wu, wu_iterations, wu_ratios = _fixed_graph(SplitMap(phi, phi.jacobian, frame, frame, k),
                                                    radius, tol, 'W^u')
        swapped = np.hstack([es, eu])
        ws, ws_iterations, ws_ratios = _fixed_graph(
            SplitMap(phi.inverse, phi.inverse_jacobian, swapped, swapped, s), radius, tol, 'W^s')

        def residual(z):
            v, w = z[:k], z[k:]
            return np.concatenate([w - wu.evaluate(v, check=False), v - ws.evaluate(w, check=False)])

        def jacobian(z):
            v, w = z[:k], z[k:]
            return np.block([[-wu.derivative(v, check=False), np.eye(s)],
                             [np.eye(k), -ws.derivative(w, check=False)]])

        meet = newton_solve(residual, jacobian, np.zeros(k + s))
        if not meet.converged or np.linalg.norm(meet.x) > radius * np.sqrt(2.0):
            raise IntersectionFail(meet.residual)
        seed = frame @ meet.x
    else:
        wu_iterations, wu_ratios = 0, []
        seed = np.zeros(phi.dim)

    eye = np.eye(phi.dim)
    refined = newton_solve(lambda y: phi(y) - y, lambda y: phi.jacobian(y) - eye, seed)
    if not refined.converged:
        raise IntersectionFail(refined.residual)
    history = refined.history
    steps = [b / a for a, b in zip(history[:-1], history[1:]) if a > 1e-12]
    if steps and steps[-1] > 0.1:
        logger.warning("Newton refinement converges slowly (last ratio %.3g)", steps[-1])

    y = refined.x
    dphi = phi.jacobian(y)
    moduli = np.sort(np.abs(np.linalg.eigvals(dphi)))[::-1]
    hyperbolic = bool(np.all(np.abs(moduli - 1.0) > margin))
    distances = {'u': subspace_distance(_eigenspace(dphi, True), eu),
                 's': subspace_distance(_eigenspace(dphi, False), es)}

    eps = closing_epsilon(report, radius)
    within = None
    if report.endpoint_distance is not None:
        within = bool(report.endpoint_distance < eps
                      and all(d < eps for d in report.subspace_distances.values()))
        if not within:
            logger.warning("Endpoint data exceed epsilon = %.3g", eps)
    p0_ok = None
    if chi_bar_u is not None:
        p0_ok = bool(p * chi_bar_u >= report.M_u * np.log(2.0))

    z = y if chart is None else chart.ambient(seq.n_min, y)
    result = PeriodicPointResult(
        z=np.asarray(z).tolist(), z_chart=y.tolist(), period=p,
        residual=float(np.linalg.norm(phi(y) - y)), distance=float(np.linalg.norm(y)),
        eigen_moduli=moduli.tolist(), subspace_distances=distances, hyperbolic=hyperbolic,
        margin=margin, wu_iterations=wu_iterations, ws_iterations=ws_iterations,
        wu_ratios=wu_ratios, ws_ratios=ws_ratios, newton_history=history, epsilon=eps,
        endpoint_within_epsilon=within, p0_satisfied=p0_ok,
    )
    if result.residual > config.TOLERANCES['periodic_residual']:
        logger.warning("Periodic residual %.3e exceeds tolerance", result.residual)
    logger.info("Closed orbit of period %d at distance %.3e (residual %.2e, hyperbolic=%s)",
                p, result.distance, result.residual, hyperbolic)
    return result
