import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import null_space, subspace_angles

import config
from src.errors import ConeEscape, ConeInvarianceFail, PreconditionViolated
from src.germs.germ import GermSequence

logger = logging.getLogger(__name__)


def orthonormalize(basis) -> np.ndarray:
    """Orthonormal basis of the column span, keeping column orientation"""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[1] == 0:
        return basis.reshape(basis.shape[0], 0)
    q, r = np.linalg.qr(basis)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Sine of the largest principal angle (0 for two empty subspaces)"""
    if a.shape[1] == 0 and b.shape[1] == 0:
        return 0.0
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 1.0
    return float(np.sin(np.max(subspace_angles(a, b))))


def minimal_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Smallest principal angle; pi/2 when either subspace is trivial"""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.pi / 2
    return float(np.min(subspace_angles(a, b)))


@dataclass(frozen=True, eq=False)
class Splitting:
    """Orthonormal bases of E^u_n and E^s_n for n = n_min, ..., n_min + len - 1"""
    n_min: int
    unstable: Tuple[np.ndarray, ...]
    stable: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.unstable) != len(self.stable):
            raise PreconditionViolated("Unstable and stable bases cover different ranges")
        object.__setattr__(self, 'unstable', tuple(orthonormalize(e) for e in self.unstable))
        object.__setattr__(self, 'stable', tuple(orthonormalize(e) for e in self.stable))

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.unstable) - 1

    @property
    def dim(self) -> int:
        return self.unstable[0].shape[0]

    @property
    def u_dim(self) -> int:
        return self.unstable[0].shape[1]

    @property
    def s_dim(self) -> int:
        return self.stable[0].shape[1]

    def at(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        if not self.n_min <= n <= self.n_max:
            raise IndexError(f"Splitting has no subspaces at index {n}")
        i = n - self.n_min
        return self.unstable[i], self.stable[i]

    def frame(self, n: int) -> np.ndarray:
        """Columns [E^u_n | E^s_n]; coordinates (v, w) map to frame @ (v, w)"""
        eu, es = self.at(n)
        return np.hstack([eu, es])

    def swapped(self) -> 'Splitting':
        return Splitting(self.n_min, self.stable, self.unstable)

    def reversed(self) -> 'Splitting':
        """Splitting for the index-reversal adapter: E'_j = E^{swap}_{-j}"""
        return Splitting(-self.n_max, self.stable[::-1], self.unstable[::-1])

    def residual(self, seq: GermSequence) -> np.ndarray:
        """Per index, max over sigma of d(Df_n(0) E^sigma_n, E^sigma_{n+1})"""
        lo = max(seq.n_min, self.n_min)
        hi = min(seq.n_max, self.n_max - 1)
        out = []
        for n in range(lo, hi + 1):
            df = seq[n].jacobian(np.zeros(seq.dim))
            eu, es = self.at(n)
            eu1, es1 = self.at(n + 1)
            out.append(max(subspace_distance(orthonormalize(df @ eu), eu1),
                           subspace_distance(orthonormalize(df @ es), es1)))
        return np.asarray(out)

    def is_invariant(self, seq: GermSequence, tol: float = None) -> bool:
        tol = config.TOLERANCES['splitting'] if tol is None else tol
        res = self.residual(seq)
        return bool(res.size == 0 or res.max() <= tol)

    @classmethod
    def constant(cls, eu, es, n_min: int, n_max: int) -> 'Splitting':
        count = n_max - n_min + 1
        eu, es = np.asarray(eu, dtype=float), np.asarray(es, dtype=float)
        return cls(n_min, (eu,) * count, (es,) * count)

    @classmethod
    def coordinate(cls, dim: int, u_dim: int, n_min: int, n_max: int) -> 'Splitting':
        eye = np.eye(dim)
        return cls.constant(eye[:, :u_dim], eye[:, u_dim:], n_min, n_max)

    @classmethod
    def auto_eigen(cls, seq: GermSequence, n_max: Optional[int] = None) -> 'Splitting':
        """
        Eigenspaces of each Df_n(0) split at modulus 1.

        Invariant only for stationary or commuting linear parts; the residual
        check catches other cases. The last index reuses the final germ.
        """
        n_max = seq.n_max + 1 if n_max is None else n_max
        unstable, stable = [], []
        for n in range(seq.n_min, n_max + 1):
            df = seq[min(n, seq.n_max)].jacobian(np.zeros(seq.dim))
            values, vectors = np.linalg.eig(df)
            if np.any(np.abs(values.imag) > 1e-12):
                raise PreconditionViolated(f"Complex spectrum at index {n}; supply bases or cones")
            values, vectors = values.real, vectors.real
            unstable.append(vectors[:, np.abs(values) > 1.0])
            stable.append(vectors[:, np.abs(values) < 1.0])
            if unstable[-1].shape[1] + stable[-1].shape[1] != seq.dim:
                raise PreconditionViolated(f"Eigenvalue of modulus 1 at index {n}")
        return cls(seq.n_min, tuple(unstable), tuple(stable))


def _in_cone(subspace: np.ndarray, center: np.ndarray, opening: float) -> bool:
    if subspace.shape[1] == 0:
        return True
    return float(np.max(subspace_angles(subspace, center))) < opening


def boundary_samples(center: np.ndarray, opening: float, count: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Unit vectors at angle exactly `opening` from the subspace `center`"""
    center = orthonormalize(center)
    complement = null_space(center.T)
    if center.shape[1] == 0 or complement.shape[1] == 0:
        return np.zeros((center.shape[0], 0))
    samples = []
    for i in range(count):
        if i < center.shape[1] * complement.shape[1] * 2:
            a = center[:, i % center.shape[1]]
            b = complement[:, (i // center.shape[1]) % complement.shape[1]]
            b = b if (i // (center.shape[1] * complement.shape[1])) % 2 == 0 else -b
        else:
            a = center @ rng.standard_normal(center.shape[1])
            b = complement @ rng.standard_normal(complement.shape[1])
            a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        samples.append(np.cos(opening) * a + np.sin(opening) * b)
    return np.column_stack(samples)


def _angle_to(vectors: np.ndarray, center: np.ndarray) -> np.ndarray:
    proj = np.linalg.norm(center.T @ vectors, axis=0) / np.linalg.norm(vectors, axis=0)
    return np.arccos(np.clip(proj, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class ConeField:
    """Cones K^u_n, K^s_n around center subspaces with openings zeta_n"""
    n_min: int
    unstable_centers: Tuple[np.ndarray, ...]
    stable_centers: Tuple[np.ndarray, ...]
    unstable_openings: np.ndarray
    stable_openings: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'unstable_centers',
                           tuple(orthonormalize(c) for c in self.unstable_centers))
        object.__setattr__(self, 'stable_centers',
                           tuple(orthonormalize(c) for c in self.stable_centers))
        for name in ('unstable_openings', 'stable_openings'):
            openings = np.asarray(getattr(self, name), dtype=float)
            if np.any(openings <= 0) or np.any(openings >= np.pi / 2):
                raise PreconditionViolated("Cone openings must lie in (0, pi/2)")
            object.__setattr__(self, name, openings)

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.unstable_centers) - 1

    def unstable_cone(self, n: int):
        i = n - self.n_min
        return self.unstable_centers[i], self.unstable_openings[i]

    def stable_cone(self, n: int):
        i = n - self.n_min
        return self.stable_centers[i], self.stable_openings[i]

    @classmethod
    def constant(cls, eu, es, zeta_u: float, zeta_s: float, n_min: int, n_max: int) -> 'ConeField':
        count = n_max - n_min + 1
        return cls(n_min, (np.asarray(eu, dtype=float),) * count,
                   (np.asarray(es, dtype=float),) * count,
                   np.full(count, zeta_u), np.full(count, zeta_s))

    def invariance_failure(self, seq: GermSequence, samples: int = 16,
                           seed: int = None) -> Optional[int]:
        """First index n where Df_n(0) fails to carry K^u_n into K^u_{n+1}
        (or Df_n(0)^{-1} fails to carry K^s_{n+1} into K^s_n); None if none"""
        rng = np.random.default_rng(config.RANDOM_SEED if seed is None else seed)
        for n in range(max(seq.n_min, self.n_min), min(seq.n_max, self.n_max - 1) + 1):
            df = seq[n].jacobian(np.zeros(seq.dim))
            cu, zu = self.unstable_cone(n)
            cu1, zu1 = self.unstable_cone(n + 1)
            edge = boundary_samples(cu, zu, samples, rng)
            if edge.shape[1] and np.any(_angle_to(df @ edge, cu1) >= zu1):
                return n
            cs1, zs1 = self.stable_cone(n + 1)
            cs, zs = self.stable_cone(n)
            edge = boundary_samples(cs1, zs1, samples, rng)
            if edge.shape[1] and np.any(_angle_to(np.linalg.solve(df, edge), cs) >= zs):
                return n
        return None

    def check_invariance(self, seq: GermSequence, samples: int = 16, seed: int = None):
        step = self.invariance_failure(seq, samples, seed)
        if step is not None:
            raise ConeInvarianceFail(step)


def cones_to_splitting(seq: GermSequence, cones: ConeField,
                       window: Optional[int] = None) -> Splitting:
    """
    Derive an invariant splitting from a cone field.

    E^s_n is the stable center at min(n + window, end) pulled back by
    Df(0)^{-1}; E^u_n the unstable center at max(n - window, start) pushed
    forward. Every intermediate subspace is certified to lie inside the cone
    at its index. window=None uses the whole range, which gives an exactly
    invariant splitting; window=0 returns the cone centers.
    """
    start = max(seq.n_min, cones.n_min)
    end = min(seq.n_max + 1, cones.n_max)
    if end < start:
        raise PreconditionViolated("Cone field and germ sequence do not overlap")
    zero = np.zeros(seq.dim)
    jacobians = {n: seq[n].jacobian(zero) for n in range(start, end)}
    span = end - start if window is None else window

    def push(j0: int, n: int) -> np.ndarray:
        basis = cones.unstable_cone(j0)[0]
        for j in range(j0, n):
            basis = orthonormalize(jacobians[j] @ basis)
            center, opening = cones.unstable_cone(j + 1)
            if not _in_cone(basis, center, opening):
                raise ConeEscape(at=j + 1)
        return basis

    def pull(j1: int, n: int) -> np.ndarray:
        basis = cones.stable_cone(j1)[0]
        for j in range(j1 - 1, n - 1, -1):
            basis = orthonormalize(np.linalg.solve(jacobians[j], basis))
            center, opening = cones.stable_cone(j)
            if not _in_cone(basis, center, opening):
                raise ConeEscape(at=j)
        return basis

    unstable, stable = [], []
    if span >= end - start:
        # one sweep in each direction covers every index
        basis = cones.unstable_cone(start)[0]
        unstable.append(basis)
        for n in range(start, end):
            basis = orthonormalize(jacobians[n] @ basis)
            center, opening = cones.unstable_cone(n + 1)
            if not _in_cone(basis, center, opening):
                raise ConeEscape(at=n + 1)
            unstable.append(basis)
        basis = cones.stable_cone(end)[0]
        stable.append(basis)
        for n in range(end - 1, start - 1, -1):
            basis = orthonormalize(np.linalg.solve(jacobians[n], basis))
            center, opening = cones.stable_cone(n)
            if not _in_cone(basis, center, opening):
                raise ConeEscape(at=n)
            stable.append(basis)
        stable.reverse()
    else:
        for n in range(start, end + 1):
            unstable.append(push(max(start, n - span), n))
            stable.append(pull(min(end, n + span), n))

    logger.debug("Derived splitting on [%d, %d] from cones (window=%s)", start, end, window)
    return Splitting(start, tuple(unstable), tuple(stable))
