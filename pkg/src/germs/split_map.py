import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

import config
from src.germs.germ import Germ
from src.germs.splitting import Splitting

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SplitMap:
    """
    A map written in splitting coordinates:

        F(v, w) = (A v + g(v, w), B w + h(v, w))

    with x = frame_in @ (v, w) on the source side and (v, w) = frame_out^{-1} y
    on the target side. A and B are the diagonal blocks of DF(0); g and h
    collect everything else, including any constant offset when the map
    does not fix the origin.
    """
    func: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    frame_in: np.ndarray
    frame_out: np.ndarray
    u_dim: int
    A: np.ndarray = None
    B: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, '_inv_out', np.linalg.inv(self.frame_out))
        d0 = self.coordinate_jacobian(np.zeros(self.frame_in.shape[1]))
        k = self.u_dim
        object.__setattr__(self, 'A', d0[:k, :k].copy())
        object.__setattr__(self, 'B', d0[k:, k:].copy())

    @property
    def dim(self) -> int:
        return self.frame_in.shape[0]

    @property
    def s_dim(self) -> int:
        return self.dim - self.u_dim

    def to_ambient(self, v, w) -> np.ndarray:
        return self.frame_in @ np.concatenate([np.atleast_1d(v), np.atleast_1d(w)])

    def from_ambient(self, y) -> tuple:
        z = self._inv_out @ np.asarray(y, dtype=float)
        return z[:self.u_dim], z[self.u_dim:]

    def forward(self, v, w) -> tuple:
        return self.from_ambient(self.func(self.to_ambient(v, w)))

    def coordinate_jacobian(self, z) -> np.ndarray:
        """DF at coordinates z = (v, w), as a (d x d) block matrix"""
        z = np.asarray(z, dtype=float)
        return self._inv_out @ self.jac(self.frame_in @ z) @ self.frame_in

    def g(self, v, w) -> np.ndarray:
        return self.forward(v, w)[0] - self.A @ np.atleast_1d(v)

    def h(self, v, w) -> np.ndarray:
        return self.forward(v, w)[1] - self.B @ np.atleast_1d(w)

    def origin_error(self) -> float:
        """max of |g(0)|, |h(0)|, |Dg(0)|, |Dh(0)|"""
        k = self.u_dim
        z0 = np.zeros(self.dim)
        value = np.linalg.norm(np.concatenate(self.forward(z0[:k], z0[k:])))
        d0 = self.coordinate_jacobian(z0)
        off = max(np.linalg.norm(d0[:k, k:]) if self.s_dim else 0.0,
                  np.linalg.norm(d0[k:, :k]) if self.s_dim else 0.0)
        return float(max(value, off))

    @classmethod
    def from_germ(cls, germ: Germ, frame_in: np.ndarray, frame_out: np.ndarray,
                  u_dim: int) -> 'SplitMap':
        return cls(germ.__call__, germ.jacobian, frame_in, frame_out, u_dim)


def nonlinear_split(germ: Germ, split: Splitting, n: int,
                    split_next: Optional[Splitting] = None) -> SplitMap:
    """
    Write f_n as (A_n v + g_n(v, w), B_n w + h_n(v, w)) in the coordinates of
    (E^u_n, E^s_n) -> (E^u_{n+1}, E^s_{n+1}).
    """
    target = split if split_next is None else split_next
    result = SplitMap.from_germ(germ, split.frame(n), target.frame(n + 1), split.u_dim)
    error = result.origin_error()
    if error > config.TOLERANCES['splitting'] * max(1.0, float(np.abs(result.A).max())):
        logger.warning("Error term at index %d does not vanish to first order (%.2e)", n, error)
    return result
