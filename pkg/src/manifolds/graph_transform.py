import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

import config
from src.errors import ClassEscape, DomainExit, NewtonFail, OutOfDomain, PreconditionViolated
from src.germs.germ import GermSequence, compose
from src.germs.linear_data import LinearData
from src.germs.newton import newton_solve
from src.germs.split_map import SplitMap, nonlinear_split
from src.germs.splitting import Splitting
from src.manifolds.admissible import AdmissibleManifold, ClassParams, c0_distance, probe_grid
from src.rates.parameters import ParamSeq, check_theorem_c, hat_r

logger = logging.getLogger(__name__)


@dataclass
class TransformStepReport:
    n: int
    r_in: float
    r_out: float
    tau_out: float
    sigma_out: float
    kappa_out: float
    newton_iters: int
    residual: float
    expansion_min: float
    domain_coverage: float
    class_ok: bool = True
    failed: str = ''
    invariance_error: float = np.nan

    def to_dict(self) -> dict:
        return asdict(self)


def steps_frame(reports: Sequence[TransformStepReport]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in reports])


def class_params_at(params: ParamSeq, n: int) -> ClassParams:
    values = params.at(n)
    return ClassParams(r=values['r'], tau=values['tau'], sigma=values['sigma'],
                       kappa=values['kappa'], gamma=values['gamma'], alpha=values['alpha'])


def transform_split(sm: SplitMap, m: AdmissibleManifold, r_out: float, n: int = 0,
                    out_params: Optional[ClassParams] = None, strict: bool = False,
                    degree: Optional[int] = None) -> tuple:
    """
    One graph-transform step for a map in splitting coordinates.

    For each output node vb of B^u(r_out) the preimage v solves
    vb = A v + g(v, psi(v)) by damped Newton seeded at A^{-1} vb. Then

        psi_bar(vb)   = B psi(v) + h(v, psi(v))
        D psi_bar(vb) = (B D psi + d1 h + d2 h D psi)(A + d1 g + d2 g D psi)^{-1}
    """
    k, s = m.u_dim, m.s_dim
    if sm.u_dim != k or sm.s_dim != s:
        raise PreconditionViolated("Manifold and map use different splittings")
    degree = m.degree if degree is None else degree
    out = AdmissibleManifold.zero(k, s, r_out, degree)
    a_inv = np.linalg.inv(sm.A)
    tol = config.TOLERANCES['newton']

    values = np.zeros((len(out.nodes), s))
    derivs = np.zeros((len(out.nodes), s, k))
    preimages = np.zeros((len(out.nodes), k))
    worst_residual, most_iters = 0.0, 0

    def split_jac(v):
        w = m.evaluate(v, check=False)
        jac = sm.coordinate_jacobian(np.concatenate([v, w]))
        dpsi = m.derivative(v, check=False)
        return jac, dpsi

    for j, vb in enumerate(out.nodes):
        def residual(v, _vb=vb):
            return sm.forward(v, m.evaluate(v, check=False))[0] - _vb

        def jacobian(v):
            jac, dpsi = split_jac(v)
            return jac[:k, :k] + jac[:k, k:] @ dpsi

        result = newton_solve(residual, jacobian, a_inv @ vb, tol=tol)
        if not result.converged:
            raise NewtonFail(j, result.residual)
        v = result.x
        jac, dpsi = split_jac(v)
        a_hat = jac[:k, :k] + jac[:k, k:] @ dpsi
        values[j] = sm.forward(v, m.evaluate(v, check=False))[1]
        derivs[j] = (jac[k:, :k] + jac[k:, k:] @ dpsi) @ np.linalg.inv(a_hat)
        preimages[j] = v
        worst_residual = max(worst_residual, result.residual)
        most_iters = max(most_iters, result.iterations)

    image = AdmissibleManifold(k, s, r_out, degree, values, derivs, out_params)
    inside = out.inside()
    reached = np.linalg.norm(preimages, axis=1) <= m.radius * (1.0 + 1e-12)
    coverage = float(np.mean(reached[inside]))
    if coverage < 1.0:
        logger.warning("Step %d: only %.1f%% of B^u(%.3g) has a preimage in B^u(%.3g)",
                       n, 100 * coverage, r_out, m.radius)

    # Pairwise expansion of graph points along the ordered output nodes
    pts = np.hstack([preimages, m.evaluate(preimages, check=False).reshape(-1, s)])
    imgs = np.hstack([out.nodes, values])
    src_gap = np.linalg.norm(np.diff(pts[inside], axis=0), axis=1)
    img_gap = np.linalg.norm(np.diff(imgs[inside], axis=0), axis=1)
    keep = src_gap > config.TOLERANCES['degenerate_pair']
    expansion = float(np.min(img_gap[keep] / src_gap[keep])) if keep.any() else np.nan

    failed = []
    if out_params is not None:
        check = image.class_check(out_params)
        failed = check.failed()
        if failed:
            if strict:
                raise ClassEscape(n + 1, failed)
            logger.warning("Step %d: image leaves its class (%s)", n, ', '.join(failed))

    report = TransformStepReport(
        n=n, r_in=m.radius, r_out=r_out,
        tau_out=np.nan if out_params is None else out_params.tau,
        sigma_out=np.nan if out_params is None else out_params.sigma,
        kappa_out=np.nan if out_params is None else out_params.kappa,
        newton_iters=most_iters, residual=worst_residual, expansion_min=expansion,
        domain_coverage=coverage, class_ok=not failed, failed=','.join(failed),
    )
    return image, report


def _params_valid_at(lin: LinearData, params: ParamSeq, n: int) -> bool:
    flags = params.flags if params.flags else check_theorem_c(lin, params).flags
    i = n - params.n_min
    return all(bool(values[i]) for name, values in flags.items()
               if name.startswith('rec_') and i < len(values))


def transform(seq: GermSequence, split: Splitting, lin: Optional[LinearData],
              params: ParamSeq, n: int, m: AdmissibleManifold, strict: bool = False,
              r_out: Optional[float] = None) -> tuple:
    """G_n applied to m, with the output ball and class taken from params at n + 1"""
    if lin is not None and not _params_valid_at(lin, params, n):
        logger.warning("Parameter recursions fail at index %d", n)
    in_params = class_params_at(params, n)
    pre = m.class_check(in_params)
    if not pre.member:
        logger.warning("Input manifold at %d is outside its class (%s)", n, ', '.join(pre.failed()))
    out_params = class_params_at(params, n + 1)
    r_out = out_params.r if r_out is None else r_out
    sm = nonlinear_split(seq[n], split, n)
    return transform_split(sm, m, r_out, n, out_params, strict)


def graph_invariance_error(seq: GermSequence, split: Splitting, n: int,
                           m: AdmissibleManifold, m_next: AdmissibleManifold,
                           probes: Optional[int] = None) -> float:
    """
    Push probe points of graph psi_n through f_n and measure their vertical
    distance to graph psi_{n+1}; images outside B^u(r_{n+1}) are skipped.
    """
    probes = config.PROBE_POINTS if probes is None else probes
    if m.s_dim == 0:
        return 0.0
    sm = nonlinear_split(seq[n], split, n)
    grid = probe_grid(m.u_dim, m.radius, max(2, int(np.ceil(probes ** (1.0 / m.u_dim)))))
    if len(grid) > probes:
        grid = grid[np.linspace(0, len(grid) - 1, probes).astype(int)]
    worst = 0.0
    for v in grid:
        vb, wb = sm.forward(v, m.evaluate(v, check=False))
        if np.linalg.norm(vb) > m_next.radius:
            continue
        worst = max(worst, float(np.linalg.norm(wb - m_next.evaluate(vb))))
    return worst


def push(seq: GermSequence, split: Splitting, lin: Optional[LinearData], params: ParamSeq,
         m0: AdmissibleManifold, start: int, stop: int, strict: bool = False,
         probes: Optional[int] = None) -> tuple:
    """
    Manifolds psi_start, ..., psi_stop with psi_{n+1} = G_n psi_n, and a step
    report per transform carrying the probe-point invariance error.
    """
    if stop < start:
        raise PreconditionViolated("push needs start <= stop")
    manifolds = [m0]
    reports = []
    disable = logger.getEffectiveLevel() > logging.INFO or stop - start < 32
    for n in tqdm(range(start, stop), desc='push', disable=disable):
        try:
            image, report = transform(seq, split, lin, params, n, manifolds[-1], strict)
        except (NewtonFail, DomainExit) as exc:
            logger.error("push failed at index %d: %s", n, exc)
            raise
        report.invariance_error = graph_invariance_error(seq, split, n, manifolds[-1], image, probes)
        manifolds.append(image)
        reports.append(report)
    return manifolds, reports


@dataclass
class ExpansionReport:
    min_factor: float
    log_bound: float
    pairs_used: int
    violations: int
    holds: bool


def _graph_points(m: AdmissibleManifold, frame: np.ndarray, count: int,
                  rng: np.random.Generator) -> np.ndarray:
    directions = rng.standard_normal((count, m.u_dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = m.radius * rng.uniform(0.0, 1.0, count) ** (1.0 / m.u_dim)
    v = directions * radii[:, np.newaxis]
    w = m.evaluate(v, check=False).reshape(count, m.s_dim)
    return np.hstack([v, w]) @ frame.T


def check_expansion(seq: GermSequence, split: Splitting, manifolds: Dict[int, AdmissibleManifold],
                    m_idx: int, n_idx: int, pairs: int = None, lin: Optional[LinearData] = None,
                    delta: Optional[float] = None, chi_bar_u: Optional[float] = None,
                    m_seq: Optional[np.ndarray] = None, seed: int = None) -> ExpansionReport:
    """
    min |F_{m,n}(x) - F_{m,n}(y)| / |x - y| over sampled pairs of graph psi_m
    whose orbits keep their unstable components inside B^u(r_k), k = m..n.

    With `delta` the bound is e^{sum (lambda^u_k - delta)}; with `chi_bar_u`
    it is e^{-M_n} e^{(n-m) chi_bar_u} (M_n from m_seq, zero if omitted).
    """
    pairs = config.CONDITION_SAMPLES if pairs is None else pairs
    rng = np.random.default_rng(config.RANDOM_SEED if seed is None else seed)
    if delta is not None:
        if lin is None:
            raise PreconditionViolated("The delta bound needs linear data")
        i, j = m_idx - lin.n_min, n_idx - lin.n_min
        log_bound = float(np.sum(lin.lambda_u[i:j] - delta))
    elif chi_bar_u is not None:
        m_n = 0.0 if m_seq is None else float(m_seq[n_idx - (lin.n_min if lin is not None else 0)])
        log_bound = (n_idx - m_idx) * chi_bar_u - m_n
    else:
        raise PreconditionViolated("Give either delta or chi_bar_u")

    frame = split.frame(m_idx)
    xs = _graph_points(manifolds[m_idx], frame, pairs, rng)
    ys = _graph_points(manifolds[m_idx], frame, pairs, rng)
    slack = config.TOLERANCES['expansion_slack']
    factors = []
    for x, y in zip(xs, ys):
        dist = np.linalg.norm(x - y)
        if dist < config.TOLERANCES['degenerate_pair']:
            continue
        fx, fy, inside = x, y, True
        for k in range(m_idx, n_idx):
            fx, fy = compose(seq, k, k + 1, fx), compose(seq, k, k + 1, fy)
            radius = manifolds[k + 1].radius if (k + 1) in manifolds else np.inf
            u_dim = split.u_dim
            inv = np.linalg.inv(split.frame(k + 1))
            if (np.linalg.norm((inv @ fx)[:u_dim]) > radius
                    or np.linalg.norm((inv @ fy)[:u_dim]) > radius):
                inside = False
                break
        if inside:
            factors.append(np.linalg.norm(fx - fy) / dist)
    factors = np.asarray(factors)
    bound = np.exp(log_bound)
    violations = int(np.sum(factors < bound * (1.0 - slack)))
    min_factor = float(factors.min()) if factors.size else np.nan
    if violations:
        logger.warning("Expansion below e^%.4f for %d of %d pairs", log_bound, violations,
                       factors.size)
    return ExpansionReport(min_factor, log_bound, int(factors.size), violations, violations == 0)


@dataclass
class AttractionReport:
    distances: np.ndarray
    ratios: np.ndarray
    bounds: Optional[np.ndarray] = None
    holds: bool = True


def check_attraction(seq: GermSequence, split: Splitting, manifolds: Dict[int, AdmissibleManifold],
                     start: int, x0, steps: int, rates=None) -> AttractionReport:
    """
    Vertical distances |w_n - psi_n(v_n)| along the orbit of x0 and their
    one-step ratios, compared with e^{check lambda^s_n} when derived rates
    are given. Ratios are skipped once the distance falls below 1e-14.
    """
    x = np.asarray(x0, dtype=float)
    k = split.u_dim
    distances = []
    for n in range(start, start + steps + 1):
        z = np.linalg.solve(split.frame(n), x)
        v, w = z[:k], z[k:]
        try:
            distances.append(float(np.linalg.norm(w - manifolds[n].evaluate(v))))
        except OutOfDomain:
            raise DomainExit(at=n)
        if n < start + steps:
            x = compose(seq, n, n + 1, x)
    distances = np.asarray(distances)
    ratios = np.full(steps, np.nan)
    valid = distances[:-1] >= 1e-14
    ratios[valid] = distances[1:][valid] / distances[:-1][valid]

    bounds, holds = None, True
    if rates is not None:
        i = start - rates.n_min
        bounds = np.exp(rates.lambda_check_s[i:i + steps])
        ok = ~valid | (ratios <= bounds * (1.0 + config.TOLERANCES['expansion_slack']))
        holds = bool(np.all(ok))
        if not holds:
            logger.warning("Vertical contraction exceeds e^{check lambda^s} at %d steps",
                           int(np.sum(~ok)))
    return AttractionReport(distances, ratios, bounds, holds)


@dataclass
class ContractionReport:
    distances: np.ndarray
    bounds: np.ndarray
    holds: bool


def check_contraction(seq: GermSequence, split: Splitting, lin: LinearData, params: ParamSeq,
                      phi0: AdmissibleManifold, psi0: AdmissibleManifold,
                      steps: int) -> ContractionReport:
    """
    |G phi_0 - G psi_0|_{C^0} at n against
    e^{sum (lambda^s_k + delta)} |phi_0 - psi_0|_{C^0(B(hat r_n))},
    both families pushed from the first index of params.
    """
    start = params.n_min
    phis, _ = push(seq, split, lin, params, phi0, start, start + steps)
    psis, _ = push(seq, split, lin, params, psi0, start, start + steps)
    i = start - lin.n_min
    distances, bounds = [], []
    for j in range(steps + 1):
        distances.append(c0_distance(phis[j], psis[j]))
        initial = c0_distance(phi0, psi0, radius=hat_r(lin, params, start + j))
        bounds.append(np.exp(np.sum(lin.lambda_s[i:i + j] + params.delta)) * initial)
    distances, bounds = np.asarray(distances), np.asarray(bounds)
    holds = bool(np.all(distances <= bounds * (1.0 + 1e-9) + 1e-15))
    if not holds:
        logger.warning("C0 contraction bound fails at %d indices", int(np.sum(distances > bounds)))
    return ContractionReport(distances, bounds, holds)
