import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel
from scipy.linalg import svdvals
from tqdm import tqdm

import config
from src.errors import DomainExit, NoConvergence, OutOfDomain, PreconditionViolated
from src.germs.germ import GermSequence
from src.germs.linear_data import LinearData
from src.germs.split_map import nonlinear_split
from src.germs.splitting import Splitting
from src.manifolds.admissible import AdmissibleManifold, c0_distance
from src.manifolds.graph_transform import transform_split
from src.rates.derived_rates import derived_rates
from src.rates.parameters import ParamSeq

logger = logging.getLogger(__name__)


class UnstableSolveReport(BaseModel):
    converged: bool
    iterations: int
    window: int
    c0_residual: float
    history: List[float] = []
    residuals: Dict[int, float] = {}
    cauchy_bound: Optional[float] = None
    cauchy_certified: Optional[bool] = None


def _radius_at(radius: Union[float, ParamSeq], n: int) -> float:
    if isinstance(radius, ParamSeq):
        i = n - radius.n_min
        if not 0 <= i < len(radius):
            raise PreconditionViolated(f"Parameter sequence has no radius at index {n}")
        return float(radius.r[i])
    return float(radius)


def _step(seq: GermSequence, split: Splitting, n: int, m: AdmissibleManifold,
          radius: Union[float, ParamSeq]) -> AdmissibleManifold:
    sm = nonlinear_split(seq[n], split, n)
    image, _ = transform_split(sm, m, _radius_at(radius, n + 1), n)
    return image


def _window_gaps(seq: GermSequence, split: Splitting, lin: Optional[LinearData],
                 radius: Union[float, ParamSeq], k_max: int) -> np.ndarray:
    """
    Domination gaps g_j for j = -1, -2, ..., -k_max, counted back from 0.

    lambda_check^s - lambda_hat^u when lin and a parameter sequence cover the
    window, lambda^s - lambda^u from lin when only the data does, and the
    linear gap read off Df_j(0) along the splitting otherwise.
    """
    if lin is not None and lin.n_min <= -k_max and lin.n_max >= -1:
        data = lin.window(-k_max, 0)
        if isinstance(radius, ParamSeq) and radius.n_min <= -k_max < 0 < radius.n_min + len(radius):
            i = -k_max - radius.n_min
            params = replace(radius, n_min=-k_max, r=radius.r[i:], tau=radius.tau[i:],
                             sigma=radius.sigma[i:], kappa=radius.kappa[i:],
                             gamma=radius.gamma[i:], c=None, c_hat=None, flags={})
            rates = derived_rates(data, params)
            gaps = rates.lambda_check_s - rates.lambda_hat_u
        else:
            gaps = data.lambda_s - data.lambda_u
    else:
        zero = np.zeros(seq.dim)
        gaps = []
        for n in range(-k_max, 0):
            df = seq[n].jacobian(zero)
            eu, es = split.at(n)
            expansion = np.log(np.min(svdvals(df @ eu)))
            contraction = np.log(np.max(svdvals(df @ es))) if es.shape[1] else -np.inf
            gaps.append(contraction - expansion)
        gaps = np.asarray(gaps, dtype=float)
    return gaps[::-1]


def _cauchy_bound(gap_sums: np.ndarray, k: int, gamma: float) -> float:
    """2 gamma e^{sum_{j=-k}^{-1} g_j}"""
    return float(2.0 * gamma * np.exp(gap_sums[k - 1]))


def unstable_solve(seq: GermSequence, split: Splitting, radius: Union[float, ParamSeq],
                   lin: Optional[LinearData] = None, tol: Optional[float] = None,
                   k_max: Optional[int] = None, family_length: Optional[int] = None,
                   degree: Optional[int] = None) -> tuple:
    """
    Local unstable manifolds psi_n, n <= 0, of a sequence indexed up to -1.

    psi^k_0 is the image of the zero graph at -k pushed forward to 0; k is
    doubled until successive approximants differ by less than tol in C^0 and
    the Cauchy estimate 2 gamma e^{sum g_j} over the window certifies the same
    tolerance. The summed domination gap must decrease over the window
    (PreconditionViolated otherwise); reaching k_max without a certificate
    raises NoConvergence. The returned family covers the last
    `family_length` indices, with residuals |G_n psi_n - psi_{n+1}| from
    re-applying the transform.
    """
    tol = config.TOLERANCES['unstable'] if tol is None else tol
    k_max = config.UNSTABLE_SETTINGS['k_max'] if k_max is None else k_max
    family_length = config.UNSTABLE_SETTINGS['family_length'] if family_length is None else family_length
    if not seq.n_min <= -1 <= seq.n_max:
        raise PreconditionViolated("The sequence must contain index -1")
    k_max = min(k_max, -seq.n_min)
    u_dim, s_dim = split.u_dim, split.s_dim

    gap_sums = np.cumsum(_window_gaps(seq, split, lin, radius, k_max))
    if not gap_sums[-1] < 0.0:
        raise PreconditionViolated(
            f"No domination on [{-k_max}, -1]: summed gap {gap_sums[-1]:.4g} is not negative")

    def approximate(k: int) -> Dict[int, AdmissibleManifold]:
        m = AdmissibleManifold.zero(u_dim, s_dim, _radius_at(radius, -k), degree)
        family = {}
        for n in range(-k, 0):
            m = _step(seq, split, n, m, radius)
            if n + 1 > -family_length:
                family[n + 1] = m
        return family

    def slope(family: Dict[int, AdmissibleManifold]) -> float:
        return float(max(np.abs(family[0].derivs).max(initial=0.0), 1e-16))

    history = []
    previous = None
    bound = np.inf
    k = 1
    converged = False
    disable = logger.getEffectiveLevel() > logging.INFO
    with tqdm(desc='unstable window', disable=disable) as bar:
        while k <= k_max:
            family = approximate(k)
            if previous is not None:
                distance = c0_distance(previous[0], family[0])
                history.append(distance)
                bound = _cauchy_bound(gap_sums, k, slope(family))
                logger.debug("k=%d: successive C0 distance %.3e, Cauchy bound %.3e",
                             k, distance, bound)
                if distance < tol and bound < tol:
                    converged = True
                    break
            previous = family
            k *= 2
            bar.update(1)
    if not converged:
        raise NoConvergence(k_max, history[-1] if history else np.inf)

    residuals = {}
    for n in sorted(family):
        if n + 1 in family:
            image = _step(seq, split, n, family[n], radius)
            residuals[n] = c0_distance(image, family[n + 1])
    c0_residual = max(residuals.values()) if residuals else 0.0
    if c0_residual > tol:
        logger.warning("Fixed-family residual %.3e exceeds %.1e", c0_residual, tol)

    report = UnstableSolveReport(
        converged=converged, iterations=len(history) + 1, window=k, c0_residual=c0_residual,
        history=history, residuals=residuals, cauchy_bound=bound, cauchy_certified=bool(bound < tol),
    )
    logger.info("Unstable manifold converged with window %d (residual %.2e)", k, c0_residual)
    return family, report


def backward_orbit(seq: GermSequence, x, steps: int, end: int = 0) -> np.ndarray:
    """x_{end}, x_{end-1}, ..., x_{end-steps} by inverting f_{end-1}, f_{end-2}, ..."""
    points = [np.asarray(x, dtype=float)]
    for j in range(1, steps + 1):
        germ = seq[end - j]
        inverse = germ.inverse()
        y = inverse(points[-1])
        if not germ.contains(y):
            raise DomainExit(at=end - j)
        points.append(y)
    return np.vstack(points)


@dataclass
class CharacterizationReport:
    verdict: str
    backward_member: bool
    vertical_distance: float
    norms: np.ndarray
    bounds: np.ndarray


def check_characterization(seq: GermSequence, split: Splitting, psi0: AdmissibleManifold, x,
                           C: float, chi_bar_u: float, steps: int = 10,
                           member_tol: float = 1e-8, outside_tol: float = 1e-6) -> CharacterizationReport:
    """
    A point x at index 0 belongs to the local unstable manifold iff its
    backward orbit obeys |x_{-m}| <= C e^{-m chi_bar_u}. The verdict is
    cross-checked against the vertical distance to graph psi_0 and is
    'inconclusive' when the two tests disagree or the distance is marginal.
    """
    x = np.asarray(x, dtype=float)
    try:
        orbit = backward_orbit(seq, x, steps)
        norms = np.linalg.norm(orbit, axis=1)
        bounds = C * np.exp(-np.arange(len(norms)) * chi_bar_u)
        backward = bool(np.all(norms <= bounds * (1.0 + 1e-9)))
    except DomainExit as exc:
        logger.info("Backward orbit left the domain at %d", exc.at)
        norms, bounds, backward = np.empty(0), np.empty(0), False

    z = np.linalg.solve(split.frame(0), x)
    v, w = z[:split.u_dim], z[split.u_dim:]
    try:
        vertical = float(np.linalg.norm(w - psi0.evaluate(v)))
    except OutOfDomain:
        vertical = np.inf

    if vertical <= member_tol and backward:
        verdict = 'member'
    elif vertical >= outside_tol and not backward:
        verdict = 'non-member'
    else:
        verdict = 'inconclusive'
        logger.warning("Characterisation inconclusive: backward=%s, vertical distance %.2e",
                       backward, vertical)
    return CharacterizationReport(verdict, backward, vertical, norms, bounds)


@dataclass
class BackwardContractionReport:
    ratios: np.ndarray
    bounds: np.ndarray
    holds: bool


def check_backward_contraction(seq: GermSequence, split: Splitting, psi0: AdmissibleManifold,
                               chi_bar: float, steps: int = 8, pairs: int = 32,
                               M: float = 0.0, seed: int = None) -> BackwardContractionReport:
    """
    For pairs y, z on graph psi_0: d(x_{-m}(y), x_{-m}(z)) <= e^{M} e^{-m chi_bar} d(y, z).
    Returns, per m, the worst observed ratio and its bound.
    """
    rng = np.random.default_rng(config.RANDOM_SEED if seed is None else seed)
    frame = split.frame(0)
    k = split.u_dim
    worst = np.zeros(steps + 1)
    for _ in range(pairs):
        v = rng.uniform(-1.0, 1.0, (2, k)) * psi0.radius / np.sqrt(k)
        ends = [frame @ np.concatenate([vi, psi0.evaluate(vi)]) for vi in v]
        dist = np.linalg.norm(ends[0] - ends[1])
        if dist < config.TOLERANCES['degenerate_pair']:
            continue
        orbits = [backward_orbit(seq, e, steps) for e in ends]
        ratios = np.linalg.norm(orbits[0] - orbits[1], axis=1) / dist
        worst = np.maximum(worst, ratios)
    bounds = np.exp(M - np.arange(steps + 1) * chi_bar)
    holds = bool(np.all(worst <= bounds * (1.0 + 1e-9)))
    return BackwardContractionReport(worst, bounds, holds)
