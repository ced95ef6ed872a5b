import logging
import warnings
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy.linalg import svdvals
from scipy.stats import qmc
from tqdm import tqdm

import config
from src.errors import PreconditionViolated
from src.germs.germ import Germ, GermSequence
from src.germs.splitting import Splitting, minimal_angle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HolderEstimate:
    """Sampled Hölder seminorm of Df on a ball"""
    lower: float
    extrapolated: float
    samples: int
    pairs: int


def _ball_samples(dim: int, radius: float, count: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points mapped into B(0, radius); prefixes are nested"""
    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        cube = qmc.Sobol(d=dim, scramble=True, seed=seed).random(count)
    points = (2.0 * cube - 1.0) * radius
    norms = np.linalg.norm(points, axis=1)
    outside = norms > radius
    points[outside] *= (radius / norms[outside])[:, None]
    return points


def _holder_quotients(jacobians: np.ndarray, points: np.ndarray, alpha: float) -> np.ndarray:
    diffs = points[:, None, :] - points[None, :, :]
    dist = np.linalg.norm(diffs, axis=2)
    i, j = np.triu_indices(len(points), k=1)
    keep = dist[i, j] > config.TOLERANCES['degenerate_pair']
    i, j = i[keep], j[keep]
    if i.size == 0:
        return np.zeros(0)
    norms = np.linalg.norm(jacobians[i] - jacobians[j], ord=2, axis=(1, 2))
    return norms / dist[i, j] ** alpha


def holder_estimate(germ: Germ, alpha: float, radius: float,
                    samples: int = None, seed: int = None) -> HolderEstimate:
    """
    Lower estimate of sup |Df(x) - Df(y)| / |x - y|^alpha over B(0, radius).

    Pairs are all pairs of a nested Sobol sample plus one near-diagonal
    partner per sample point, so the estimate is nondecreasing in `samples`.
    The extrapolated value adds the last doubling increment.
    """
    samples = config.HOLDER_SAMPLES if samples is None else samples
    seed = config.RANDOM_SEED if seed is None else seed
    if samples < 2:
        raise PreconditionViolated("holder_estimate needs at least 2 samples")
    if germ.linear:
        return HolderEstimate(0.0, 0.0, samples, 0)

    base = _ball_samples(germ.dim, radius, samples, seed)
    offsets = _ball_samples(germ.dim, 1.0, samples, seed + 1)
    offsets /= np.maximum(np.linalg.norm(offsets, axis=1), 1e-300)[:, None]
    partners = base + 1e-3 * radius * offsets
    norms = np.linalg.norm(partners, axis=1)
    partners[norms > radius] *= (radius / norms[norms > radius])[:, None]

    def estimate(count: int) -> tuple:
        pts = np.vstack([base[:count], partners[:count]])
        jac = np.stack([germ.jacobian(p) for p in pts])
        quotients = _holder_quotients(jac, pts, alpha)
        return (float(quotients.max()) if quotients.size else 0.0), int(quotients.size)

    lower, pairs = estimate(samples)
    half, _ = estimate(max(2, samples // 2))
    return HolderEstimate(lower, lower + max(0.0, lower - half), samples, pairs)


@dataclass(frozen=True, eq=False)
class LinearData:
    """
    Per-index rates (lambda_u, lambda_s), angles theta and nonlinearity
    bounds beta for indices n_min .. n_min + len - 1.

    theta carries one more entry than the rates: theta[-1] is the angle at
    n_max + 1, needed by beta_{n_max}.
    """
    n_min: int
    lambda_u: np.ndarray
    lambda_s: np.ndarray
    theta: np.ndarray
    beta: np.ndarray
    alpha: float = 1.0
    holder: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ('lambda_u', 'lambda_s', 'theta', 'beta'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if len(self.theta) == len(self.lambda_u):
            object.__setattr__(self, 'theta', np.append(self.theta, self.theta[-1]))
        if np.any(self.beta < 1.0):
            raise PreconditionViolated("beta_n must be at least 1")

    def __len__(self):
        return len(self.lambda_u)

    @property
    def n_max(self) -> int:
        return self.n_min + len(self) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @classmethod
    def from_rates(cls, lambda_u, lambda_s=None, theta=None, beta=None,
                   alpha: float = 1.0, n_min: int = 0) -> 'LinearData':
        """Synthetic data; missing fields default to an empty stable part"""
        lambda_u = np.asarray(lambda_u, dtype=float)
        n = len(lambda_u)
        lambda_s = np.full(n, -np.inf) if lambda_s is None else lambda_s
        theta = np.full(n + 1, np.pi / 2) if theta is None else theta
        beta = np.ones(n) if beta is None else beta
        return cls(n_min, lambda_u, lambda_s, theta, beta, alpha)

    def window(self, start: int, stop: int) -> 'LinearData':
        """Entries for indices start .. stop - 1"""
        i, j = start - self.n_min, stop - self.n_min
        return replace(self, n_min=start, lambda_u=self.lambda_u[i:j],
                       lambda_s=self.lambda_s[i:j], theta=self.theta[i:j + 1],
                       beta=self.beta[i:j],
                       holder=None if self.holder is None else self.holder[i:j])

    def global_L(self) -> float:
        """Smallest L with |lambda^u|, |lambda^s| <= L and beta_{n+1} <= e^L beta_n"""
        rates = np.concatenate([np.abs(self.lambda_u), np.abs(self.lambda_s)])
        rates = rates[np.isfinite(rates)]
        candidates = [float(rates.max()) if rates.size else 0.0]
        if len(self.beta) > 1:
            candidates.append(float(np.max(np.log(self.beta[1:] / self.beta[:-1]))))
        return max(candidates)

    def check_c4(self, L: float) -> Dict[str, bool]:
        finite_s = self.lambda_s[np.isfinite(self.lambda_s)]
        ratio_ok = True
        if len(self.beta) > 1:
            ratio_ok = bool(np.all(self.beta[1:] <= np.exp(L) * self.beta[:-1]))
        return {
            'lambda_u': bool(np.all(np.abs(self.lambda_u) <= L)),
            'lambda_s': bool(np.all(np.abs(finite_s) <= L)),
            'beta_ratio': ratio_ok,
        }

    def check_c3(self, seq: GermSequence, split: Splitting, samples: int = None,
                 seed: int = None) -> Dict[str, bool]:
        """
        Re-check the expansion, contraction, angle and nonlinearity bounds
        against random unit vectors in each subspace plus the extremal
        singular direction, with TOLERANCES['splitting'] as an absolute
        allowance on the stored estimates.
        """
        samples = config.CONDITION_SAMPLES if samples is None else samples
        rng = np.random.default_rng(config.RANDOM_SEED if seed is None else seed)
        tol = config.TOLERANCES['splitting']
        zero = np.zeros(seq.dim)
        flags = {'expansion': True, 'contraction': True, 'angle': True, 'nonlinearity': True}
        for i, n in enumerate(self.indices):
            df = seq[n].jacobian(zero)
            eu, es = split.at(n)
            vu = eu @ rng.standard_normal((eu.shape[1], samples))
            vu = np.hstack([vu / np.linalg.norm(vu, axis=0), eu @ np.linalg.svd(df @ eu)[2][-1:].T])
            if np.any(np.linalg.norm(df @ vu, axis=0) < np.exp(self.lambda_u[i]) - tol):
                flags['expansion'] = False
            if es.shape[1]:
                vs = es @ rng.standard_normal((es.shape[1], samples))
                vs = np.hstack([vs / np.linalg.norm(vs, axis=0), es @ np.linalg.svd(df @ es)[2][:1].T])
                if np.any(np.linalg.norm(df @ vs, axis=0) > np.exp(self.lambda_s[i]) + tol):
                    flags['contraction'] = False
                cosines = np.abs(np.sum(vu[:, :samples] * vs[:, :samples], axis=0))
                if np.any(np.arccos(np.clip(cosines, 0, 1)) < self.theta[i] - tol):
                    flags['angle'] = False
            if self.holder is not None:
                if max(1.0, self.holder[i]) > self.beta[i] * np.sin(self.theta[i + 1]) + tol:
                    flags['nonlinearity'] = False
        return flags

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'n': self.indices,
            'lambda_u': self.lambda_u,
            'lambda_s': self.lambda_s,
            'theta': self.theta[:-1],
            'beta': self.beta,
        })


def extract_linear_data(seq: GermSequence, split: Splitting, radius: Optional[float] = None,
                        samples: int = None, seed: int = None,
                        use_extrapolated: bool = True) -> LinearData:
    """
    Linear data of each germ along its splitting.

    lambda_u/lambda_s are logs of the extreme singular values of Df_n(0)
    restricted to E^u_n/E^s_n; theta_n the minimal principal angle;
    beta_n = max(1, H_n) / sin(theta_{n+1}) with H_n the Hölder estimate of
    Df_n on B(0, radius).
    """
    if split.n_min > seq.n_min or split.n_max < seq.n_max + 1:
        raise PreconditionViolated("Splitting must cover n_min .. n_max + 1 of the sequence")
    if not split.is_invariant(seq):
        raise PreconditionViolated("Splitting invariance residual exceeds tolerance")

    zero = np.zeros(seq.dim)
    lam_u, lam_s, holder = [], [], []
    theta = [minimal_angle(*split.at(n)) for n in range(seq.n_min, seq.n_max + 2)]
    disable = logger.getEffectiveLevel() > logging.INFO or len(seq) < 512
    for n in tqdm(seq.indices, desc='linear data', disable=disable):
        germ = seq[n]
        df = germ.jacobian(zero)
        eu, es = split.at(n)
        lam_u.append(float(np.log(np.min(svdvals(df @ eu)))))
        lam_s.append(float(np.log(np.max(svdvals(df @ es)))) if es.shape[1] else -np.inf)
        r = min(0.1, 0.5 * germ.half_width) if radius is None else radius
        est = holder_estimate(germ, seq.alpha, r, samples, seed)
        holder.append(est.extrapolated if use_extrapolated else est.lower)

    theta = np.asarray(theta)
    holder = np.asarray(holder)
    beta = np.maximum(1.0, holder) / np.sin(theta[1:])
    logger.info("Extracted linear data for %s on [%d, %d]", seq.label or 'sequence',
                seq.n_min, seq.n_max)
    return LinearData(seq.n_min, np.asarray(lam_u), np.asarray(lam_s), theta, beta,
                      seq.alpha, holder)
