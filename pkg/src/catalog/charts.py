import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import svdvals

import config
from src.errors import OrbitMismatch, PreconditionViolated
from src.germs.germ import Germ, GermSequence, finite_difference_jacobian
from src.germs.linear_data import holder_estimate
from src.germs.splitting import ConeField, Splitting, cones_to_splitting

logger = logging.getLogger(__name__)


def wrap(delta: np.ndarray) -> np.ndarray:
    """Representative of a torus displacement in [-1/2, 1/2)"""
    return delta - np.floor(np.asarray(delta) + 0.5)


@dataclass(frozen=True, eq=False)
class ChartedOrbit:
    """Germs of a map along an orbit, with the data needed to return to ambient space"""
    seq: GermSequence
    split: Splitting
    points: np.ndarray
    frames: np.ndarray
    L: float
    torus: bool = False

    def ambient(self, n: int, v) -> np.ndarray:
        """x_n + F_n v, reduced mod 1 on the torus"""
        i = n - self.seq.n_min
        x = self.points[i] + self.frames[i] @ np.asarray(v, dtype=float)
        return np.mod(x, 1.0) if self.torus else x

    def return_offset(self, p: int, start: Optional[int] = None) -> np.ndarray:
        """Chart coordinates at x_start of the displacement x_{start+p} - x_start"""
        i = (self.seq.n_min if start is None else start) - self.seq.n_min
        delta = self.points[i + p] - self.points[i]
        delta = wrap(delta) if self.torus else delta
        return self.frames[i].T @ delta

    def frame_change(self, p: int, start: Optional[int] = None) -> np.ndarray:
        i = (self.seq.n_min if start is None else start) - self.seq.n_min
        return self.frames[i].T @ self.frames[i + p]


def _angle_distortion(df: np.ndarray, rng: np.random.Generator, pairs: int = 16) -> float:
    worst = 0.0
    for _ in range(pairs):
        v, w = rng.standard_normal((2, df.shape[0]))
        sin_before = _sin_angle(v, w)
        sin_after = _sin_angle(df @ v, df @ w)
        if sin_before > 1e-8 and sin_after > 0:
            worst = max(worst, abs(np.log(sin_after / sin_before)))
    return worst


def _sin_angle(a: np.ndarray, b: np.ndarray) -> float:
    cos = abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.sqrt(max(0.0, 1.0 - cos ** 2)))


def estimate_L(seq: GermSequence, radius: float, probes: Optional[int] = None,
               seed: int = None) -> float:
    """
    Smallest L with e^{-L} <= |Df v|/|v| <= e^L, the same two-sided bound on
    the distortion of sines of angles, and |Df|_alpha <= L, over probe points
    in B(0, radius) of every germ.
    """
    probes = config.PROBE_POINTS if probes is None else probes
    rng = np.random.default_rng(config.RANDOM_SEED if seed is None else seed)
    worst = 0.0
    for n in seq.indices:
        germ = seq[n]
        points = rng.uniform(-radius, radius, (probes, seq.dim)) / np.sqrt(seq.dim)
        for y in points:
            df = germ.jacobian(y)
            sv = svdvals(df)
            worst = max(worst, abs(np.log(sv[0])), abs(np.log(sv[-1])))
            if seq.dim > 1:
                worst = max(worst, _angle_distortion(df, rng))
        est = holder_estimate(germ, seq.alpha, radius, seed=seed)
        worst = max(worst, est.extrapolated)
    return float(worst)


def chart_adapter(f: Callable[[np.ndarray], np.ndarray], points: Sequence, frames=None,
                  jac: Optional[Callable[[np.ndarray], np.ndarray]] = None, torus: bool = False,
                  n_min: int = 0, splitting: Optional[Splitting] = None,
                  cones: Optional[ConeField] = None, alpha: float = 1.0, box: float = 0.25,
                  probe_radius: float = 0.05, linear: bool = False, label: str = '') -> ChartedOrbit:
    """
    Germs f~_n(v) = F_{n+1}^T (f(x_n + F_n v) - f(x_n)) along x_0, ..., x_N.

    On the torus f is a lift to R^d and points are compared mod 1. The
    splitting is derived from `cones` when given, otherwise taken from
    `splitting`, otherwise from the eigenspaces of each linear part.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    count, dim = points.shape
    if count < 2:
        raise PreconditionViolated("An orbit needs at least two points")
    frames = (np.broadcast_to(np.eye(dim), (count, dim, dim)).copy() if frames is None
              else np.asarray(frames, dtype=float))
    for i, frame in enumerate(frames):
        if not np.allclose(frame.T @ frame, np.eye(dim), atol=1e-12):
            raise PreconditionViolated(f"Frame {i} is not orthonormal")

    tol = config.TOLERANCES['orbit']
    for i in range(count - 1):
        step = np.asarray(f(points[i]), dtype=float) - points[i + 1]
        error = float(np.linalg.norm(wrap(step) if torus else step))
        if error > tol:
            raise OrbitMismatch(n_min + i, error)

    def make(n: int) -> Germ:
        i = n - n_min
        x, frame, frame_next = points[i], frames[i], frames[i + 1]
        base = np.asarray(f(x), dtype=float)

        def func(v):
            return frame_next.T @ (np.asarray(f(x + frame @ v), dtype=float) - base)

        def jacobian(v):
            df = jac(x + frame @ v) if jac is not None else finite_difference_jacobian(f, x + frame @ v)
            return frame_next.T @ np.asarray(df, dtype=float) @ frame

        return Germ(dim, func, jacobian, -box, box, linear, label=f"{label}[{n}]")

    seq = GermSequence(make, n_min, n_min + count - 2, alpha=alpha, label=label or 'chart')
    if cones is not None:
        split = cones_to_splitting(seq, cones)
    elif splitting is not None:
        split = splitting
    else:
        split = Splitting.auto_eigen(seq)
    L = estimate_L(seq, probe_radius)
    seq = seq.with_L(L)
    logger.info("Chart adapter: %d germs along %s, L = %.4f", len(seq), label or 'orbit', L)
    return ChartedOrbit(seq, split, points, frames, L, torus)
