import logging
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import svdvals

from src.diagnostics.effective import m_sequence
from src.errors import PreconditionViolated
from src.germs.germ import GermSequence, compose_jacobian
from src.germs.splitting import (ConeField, Splitting, cones_to_splitting, minimal_angle,
                                 orthonormalize, subspace_distance)

logger = logging.getLogger(__name__)

MS_ORIENTATION = "M^s_n = max_{n<m<=p} sum_{k=n}^{m-1} (lambda^s + Delta + L 1) - (m-n) chi_hat_s"


class SegmentReport(BaseModel):
    """Finite-information hyperbolicity certificate of an orbit segment x, ..., f^p x"""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    p: int
    lambda_u: List[float]
    lambda_s: List[float]
    theta: List[float]
    defect: List[float]
    indicator: List[int]
    m_u: List[float]
    m_s: List[float]
    M_u: float
    M_s: float
    M_hat_u: float
    M_hat_s: float
    chi_hat_u: float
    chi_hat_s: float
    theta_bar: float
    L: float
    p0: Optional[int] = None
    endpoint_distance: Optional[float] = None
    subspace_distances: Dict[str, float] = {}
    offset: Optional[List[float]] = None
    frame_change: Optional[List[List[float]]] = None
    verdicts: Dict[str, bool] = {}
    ms_orientation: str = MS_ORIENTATION

    @property
    def verdict(self) -> bool:
        return all(self.verdicts.values())

    def check(self, M_u: float, M_s: float, M_hat_u: float, M_hat_s: float) -> Dict[str, bool]:
        """Truth value of each certificate inequality for the given parameters"""
        lu = np.asarray(self.lambda_u)
        ls = np.asarray(self.lambda_s)
        m_u, m_s = np.asarray(self.m_u), np.asarray(self.m_s)
        p = self.p
        tail_u = _suffix_sums(lu - self.chi_hat_u)
        head_s = _prefix_sums(ls[:p] - self.chi_hat_s)
        with np.errstate(invalid='ignore'):
            hat_u = m_s[1:p + 1] - tail_u[2:p + 2]
            hat_s = m_u[:p] + head_s[:p]
        return {
            'theta_ends': bool(self.theta[0] >= self.theta_bar and self.theta[p] >= self.theta_bar),
            'ceh_Mu': bool(M_u >= m_u[p]),
            'ceh_Ms': bool(M_s >= m_s[0]),
            'ceh_hMu': bool(np.all(M_hat_u >= np.nan_to_num(hat_u, nan=-np.inf))),
            'ceh_hMu2': bool(M_hat_u >= M_s - tail_u[1]),
            'ceh_hMs': bool(np.all(M_hat_s >= np.nan_to_num(hat_s, nan=-np.inf))),
            'ceh_hMs2': bool(M_hat_s >= M_u + head_s[p]),
        }


def _prefix_sums(values: np.ndarray) -> np.ndarray:
    """S_n = sum_{k<n} values_k, n = 0..len"""
    return np.concatenate([[0.0], np.cumsum(values)])


def _suffix_sums(values: np.ndarray) -> np.ndarray:
    """T_n = sum_{k>=n} values_k, n = 0..len"""
    return np.concatenate([np.cumsum(values[::-1])[::-1], [0.0]])


def stable_shortfall(nu: np.ndarray, chi_hat_s: float) -> np.ndarray:
    """M^s_n = max(0, max_{n<m<=p} sum_{k=n}^{m-1} (nu_k - chi_hat_s)), n = 0..p"""
    prefix = _prefix_sums(np.asarray(nu, dtype=float) - chi_hat_s)
    later_max = np.maximum.accumulate(prefix[::-1])[::-1]
    result = np.zeros(len(prefix))
    result[:-1] = np.maximum(0.0, later_max[1:] - prefix[:-1])
    return result


def stable_shortfall_bruteforce(nu, chi_hat_s: float) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    p = len(nu)
    return np.asarray([max([0.0] + [float(np.sum(nu[n:m])) - (m - n) * chi_hat_s
                                    for m in range(n + 1, p + 1)]) for n in range(p + 1)])


def ceh_check(seq: GermSequence, split: Optional[Splitting], chi_hat_u: float, chi_hat_s: float,
              theta_bar: float, L: float, p: Optional[int] = None, alpha: Optional[float] = None,
              cones: Optional[ConeField] = None, offset=None, frame_change=None,
              chi_bar_u: Optional[float] = None, params: Optional[Dict[str, float]] = None) -> SegmentReport:
    """
    Evaluate the completely-effectively-hyperbolic certificate along the
    germs f_0, ..., f_{p-1} of a segment.

    M^u_n = max(0, max_{m<n} ((n-m) chi_hat_u - sum_{k=m}^{n-1} (lambda^u - Delta - L 1)_k))
    and M^s_n as in MS_ORIENTATION. The reported parameters are the smallest
    non-negative ones meeting every inequality; `params` overrides them for
    the verdict. `offset` is the lift of f^p x - x in the chart at x and
    `frame_change` maps chart coordinates at f^p x to those at x.
    """
    if not chi_hat_s < 0 < chi_hat_u:
        raise PreconditionViolated("rates must satisfy chi_hat_s < 0 < chi_hat_u")
    start = seq.n_min
    p = len(seq) if p is None else p
    alpha = seq.alpha if alpha is None else alpha
    if cones is not None:
        cones.check_invariance(seq.restrict(start, start + p - 1))
        if split is None:
            split = cones_to_splitting(seq.restrict(start, start + p - 1), cones)
    if split is None:
        raise PreconditionViolated("ceh_check needs a splitting or a cone field")

    zero = np.zeros(seq.dim)
    lam_u, lam_s = [], []
    for k in range(p + 1):
        # the germ at f^p x is the one at x when the segment has no extra germ
        n = start + k if start + k <= seq.n_max else start
        df = seq[n].jacobian(zero)
        eu, es = split.at(start + k if start + k <= split.n_max else start)
        lam_u.append(float(np.log(np.min(svdvals(df @ eu)))))
        lam_s.append(float(np.log(np.max(svdvals(df @ es)))) if es.shape[1] else -np.inf)
    lam_u, lam_s = np.asarray(lam_u), np.asarray(lam_s)
    theta = np.asarray([minimal_angle(*split.at(start + k)) for k in range(p + 1)])

    with np.errstate(invalid='ignore'):
        defect = np.nan_to_num(np.maximum(0.0, (lam_s - lam_u) / alpha), nan=0.0, neginf=0.0)
    indicator = (theta < theta_bar).astype(int)
    mu = lam_u[:p] - defect[:p] - L * indicator[:p]
    m_u = m_sequence(mu, chi_hat_u)
    if np.all(np.isneginf(lam_s)):
        m_s = np.zeros(p + 1)
    else:
        m_s = stable_shortfall(lam_s[:p] + defect[:p] + L * indicator[:p], chi_hat_s)

    M_u, M_s = float(m_u[p]), float(m_s[0])
    tail_u = _suffix_sums(lam_u - chi_hat_u)
    head_s = _prefix_sums(lam_s[:p] - chi_hat_s)
    candidates_u = np.concatenate([m_s[1:p + 1] - tail_u[2:p + 2], [M_s - tail_u[1]]])
    with np.errstate(invalid='ignore'):
        candidates_s = np.concatenate([m_u[:p] + head_s[:p], [M_u + head_s[p]]])
    M_hat_u = max(0.0, float(np.max(candidates_u)))
    M_hat_s = max(0.0, float(np.max(candidates_s)))

    endpoint, distances = None, {}
    if offset is not None:
        endpoint = float(np.linalg.norm(offset))
        change = np.eye(seq.dim) if frame_change is None else np.asarray(frame_change, dtype=float)
        dfp = change @ compose_jacobian(seq, start, start + p, zero)
        eu, es = split.at(start)
        distances = {'u': subspace_distance(orthonormalize(dfp @ eu), eu),
                     's': subspace_distance(orthonormalize(np.linalg.solve(dfp, es)), es)
                     if es.shape[1] else 0.0}

    p0 = None
    if chi_bar_u is not None:
        p0 = int(np.ceil(M_u * np.log(2.0) / chi_bar_u))
        if p < p0:
            logger.warning("Segment length %d is below p0 = %d", p, p0)

    report = SegmentReport(
        p=p, lambda_u=lam_u.tolist(), lambda_s=lam_s.tolist(), theta=theta.tolist(),
        defect=defect.tolist(), indicator=indicator.tolist(), m_u=m_u.tolist(), m_s=m_s.tolist(),
        M_u=M_u, M_s=M_s, M_hat_u=M_hat_u, M_hat_s=M_hat_s, chi_hat_u=chi_hat_u,
        chi_hat_s=chi_hat_s, theta_bar=theta_bar, L=L, p0=p0, endpoint_distance=endpoint,
        subspace_distances=distances,
        offset=None if offset is None else np.asarray(offset, dtype=float).tolist(),
        frame_change=None if frame_change is None else np.asarray(frame_change, dtype=float).tolist(),
    )
    given = params or {}
    report.verdicts = report.check(given.get('M_u', M_u), given.get('M_s', M_s),
                                   given.get('M_hat_u', M_hat_u), given.get('M_hat_s', M_hat_s))
    logger.info("Segment of length %d: M^u=%.4g M^s=%.4g hat M^u=%.4g hat M^s=%.4g verdict=%s",
                p, M_u, M_s, M_hat_u, M_hat_s, report.verdict)
    return report
