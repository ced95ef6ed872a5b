import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, model_validator

import config
from src.diagnostics.effective import EffectiveSeries, m_sequence
from src.errors import PreconditionViolated, SeedTooLarge
from src.germs.linear_data import LinearData

logger = logging.getLogger(__name__)

RECURSIONS = ('rec_r', 'rec_t', 'rec_s', 'rec_k')
BOUNDS = ('bd_r', 'bd_b', 'bd_t', 'bd_k', 'bd_s')
HP1_CONDITIONS = ('hp_rn', 'hp_taun', 'hp_thetan', 'hp_gn', 'hp_kn')


class RateSettings(BaseModel):
    """Target rates; unstable ones positive, stable ones negative"""
    chi_hat_u: float
    chi_bar_u: float
    chi_hat_s: Optional[float] = None
    chi_bar_s: Optional[float] = None
    delta: Optional[float] = None

    @model_validator(mode='after')
    def check_ordering(self):
        if not self.chi_hat_u > self.chi_bar_u > 0:
            raise ValueError("rates must satisfy chi_hat_u > chi_bar_u > 0")
        if (self.chi_hat_s is None) != (self.chi_bar_s is None):
            raise ValueError("give both stable rates or neither")
        if self.chi_hat_s is not None and not self.chi_hat_s < self.chi_bar_s < 0:
            raise ValueError("rates must satisfy chi_hat_s < chi_bar_s < 0")
        return self

    def default_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        delta = self.chi_hat_u - self.chi_bar_u
        if self.chi_hat_s is not None:
            delta = min(delta, self.chi_bar_s - self.chi_hat_s)
        return delta


class SeedSettings(BaseModel):
    """Seeds of the parameter construction"""
    r_bar: float
    tau_bar: float = 0.0
    sigma_bar: float = 0.0
    kappa_bar: float
    kappa_hat: Optional[float] = None
    gamma_bar: Optional[float] = None
    xi: Optional[float] = None
    beta_bar: float


@dataclass(frozen=True, eq=False)
class ParamSeq:
    """
    Class parameters (r, tau, sigma, kappa, gamma) for positions 0..N with
    the globals delta, xi, gamma_bar. `flags` maps each checked condition
    to a boolean array.
    """
    n_min: int
    r: np.ndarray
    tau: np.ndarray
    sigma: np.ndarray
    kappa: np.ndarray
    gamma: np.ndarray
    alpha: float = 1.0
    delta: float = 0.0
    xi: float = np.inf
    gamma_bar: float = np.inf
    c: Optional[np.ndarray] = None
    c_hat: Optional[np.ndarray] = None
    flags: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name in ('r', 'tau', 'sigma', 'kappa', 'gamma'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    def __len__(self):
        return len(self.r)

    def at(self, n: int) -> dict:
        i = n - self.n_min
        return {'r': float(self.r[i]), 'tau': float(self.tau[i]), 'sigma': float(self.sigma[i]),
                'kappa': float(self.kappa[i]), 'gamma': float(self.gamma[i]), 'alpha': self.alpha}

    @classmethod
    def from_values(cls, n_min: int, r, tau, sigma, kappa, alpha: float = 1.0,
                    gamma=None, **globals_) -> 'ParamSeq':
        """gamma defaults to sigma + kappa r^alpha"""
        r, tau, sigma, kappa = (np.asarray(a, dtype=float) for a in (r, tau, sigma, kappa))
        gamma = sigma + kappa * r ** alpha if gamma is None else gamma
        return cls(n_min, r, tau, sigma, kappa, gamma, alpha, **globals_)

    def with_flags(self, flags: Dict[str, np.ndarray]) -> 'ParamSeq':
        merged = dict(self.flags)
        merged.update(flags)
        return replace(self, flags=merged)

    def to_frame(self) -> pd.DataFrame:
        N = len(self)
        frame = pd.DataFrame({
            'n': np.arange(self.n_min, self.n_min + N),
            'r': self.r, 'tau': self.tau, 'sigma': self.sigma,
            'kappa': self.kappa, 'gamma': self.gamma,
            'c_n': self.c if self.c is not None else np.full(N, np.nan),
        })
        bits = np.zeros(N, dtype=int)
        for bit, name in enumerate(RECURSIONS + BOUNDS + HP1_CONDITIONS):
            values = self.flags.get(name)
            if values is None:
                continue
            padded = np.ones(N, dtype=bool)
            padded[:len(values)] = values
            bits |= (~padded).astype(int) << bit
        frame['flags'] = bits
        return frame


@dataclass
class ConditionReport:
    """Per-index truth values and first failure of each condition"""
    flags: Dict[str, np.ndarray]
    n_min: int = 0

    @property
    def first_failure(self) -> Dict[str, Optional[int]]:
        out = {}
        for name, values in self.flags.items():
            bad = np.nonzero(~values)[0]
            out[name] = None if bad.size == 0 else self.n_min + int(bad[0])
        return out

    @property
    def ok(self) -> bool:
        return all(bool(np.all(v)) for v in self.flags.values())

    def failed(self) -> list:
        return [name for name, values in self.flags.items() if not np.all(values)]


def _leq(a, b, rtol):
    return np.asarray(a) <= np.asarray(b) + rtol * np.abs(np.asarray(b))


def check_theorem_c(lin: LinearData, params: ParamSeq, alpha: Optional[float] = None,
                    delta: Optional[float] = None, xi: Optional[float] = None,
                    gamma_bar: Optional[float] = None, rtol: float = None) -> ConditionReport:
    """
    The four parameter recursions and five bounds, per index:

        r_{n+1} <= e^{lu - d} r_n        beta_n r_n^a <= xi
        tau_{n+1} >= e^{ls + d} tau_n    beta_n <= xi kappa_n
        sigma_{n+1} >= e^{ls - lu + d} sigma_n          tau_n <= r_n
        kappa_{n+1} >= e^{ls - (1+a) lu + d} kappa_n    kappa_n tau_n^a <= sigma_n
                                         sigma_n + kappa_n r_n^a <= gamma_bar

    Comparisons carry a relative slack of TOLERANCES['rate'].
    """
    alpha = params.alpha if alpha is None else alpha
    delta = params.delta if delta is None else delta
    xi = params.xi if xi is None else xi
    gamma_bar = params.gamma_bar if gamma_bar is None else gamma_bar
    rtol = config.TOLERANCES['rate'] if rtol is None else rtol
    N = len(lin)
    if len(params) < N + 1:
        raise PreconditionViolated("Parameter sequence must have one more entry than the data")
    r, tau, sigma, kappa = (a[:N + 1] for a in (params.r, params.tau, params.sigma, params.kappa))
    lu, ls = lin.lambda_u, lin.lambda_s

    flags = {
        'rec_r': _leq(r[1:], np.exp(lu - delta) * r[:-1], rtol),
        'rec_t': _leq(np.exp(ls + delta) * tau[:-1], tau[1:], rtol),
        'rec_s': _leq(np.exp(ls - lu + delta) * sigma[:-1], sigma[1:], rtol),
        'rec_k': _leq(np.exp(ls - (1 + alpha) * lu + delta) * kappa[:-1], kappa[1:], rtol),
        'bd_r': _leq(lin.beta * r[:-1] ** alpha, xi, rtol),
        'bd_b': _leq(lin.beta, xi * kappa[:-1], rtol),
        'bd_t': _leq(tau, r, rtol),
        'bd_k': _leq(kappa * tau ** alpha, sigma, rtol),
        'bd_s': _leq(sigma + kappa * r ** alpha, gamma_bar, rtol),
    }
    return ConditionReport(flags, lin.n_min)


def check_hp1_conditions(lin: LinearData, params: ParamSeq, rates,
                         rtol: float = None) -> ConditionReport:
    """
    Smallness conditions of the graph-transform theorem for Hölder moduli
    Z_n(t) = kappa_n t^alpha, evaluated with the derived rates:

        r_{n+1} <= e^{hat lu} r_n - eps_f tau_n
        tau_{n+1} >= e^{check ls} tau_n
        sigma_{n+1} >= e^{ls - hat lu} sigma_n + eps_sigma
        gamma_{n+1} >= min(e^{hat ls - hat lu} gamma_n, sigma_{n+1} + kappa_{n+1} r_{n+1}^a)
        kappa_{n+1} e^{a hat lu} >= e^{ls - hat lu} kappa_n + c1 + c2 r_n^a

    The last line is the modulus condition at the worst radius t = r_n.
    """
    rtol = config.TOLERANCES['rate'] if rtol is None else rtol
    N = len(lin)
    a = params.alpha
    r, tau, sigma, kappa, gamma = (v[:N + 1] for v in (params.r, params.tau, params.sigma,
                                                         params.kappa, params.gamma))
    hu, hs, cs = rates.lambda_hat_u, rates.lambda_hat_s, rates.lambda_check_s
    ls = lin.lambda_s
    flags = {
        'hp_rn': _leq(r[1:], np.exp(hu) * r[:-1] - rates.eps_f * tau[:-1], rtol),
        'hp_taun': _leq(np.exp(cs) * tau[:-1], tau[1:], rtol),
        'hp_thetan': _leq(np.exp(ls - hu) * sigma[:-1] + rates.eps_sigma, sigma[1:], rtol),
        'hp_gn': _leq(np.minimum(np.exp(hs - hu) * gamma[:-1], sigma[1:] + kappa[1:] * r[1:] ** a),
                      gamma[1:], rtol),
        'hp_kn': _leq(np.exp(ls - hu) * kappa[:-1] + rates.rho_c1 + rates.rho_c2 * r[:-1] ** a,
                      kappa[1:] * np.exp(a * hu), rtol),
    }
    return ConditionReport(flags, lin.n_min)


def _search_conditions(lin: LinearData, alpha: float, delta: float, L: float,
                       xi: float, gamma_bar: float) -> Dict[str, bool]:
    zeta = 0.99 * delta / (2.0 + alpha)
    L1 = np.exp(L + zeta)
    lu = lin.lambda_u
    ls = lin.lambda_s[np.isfinite(lin.lambda_s)]
    lu_s = lin.lambda_u[np.isfinite(lin.lambda_s)]
    checks = {
        'enu': bool(np.all(np.exp(lu) - 6 * xi >= np.exp(lu - zeta))),
        'enchi': bool(np.log((1 - gamma_bar) / (1 + gamma_bar)) >= -2 * zeta),
        'rn': bool(np.all(np.exp(lu - zeta) - 3 * xi >= np.exp(lu - delta))),
    }
    if ls.size:
        eps_check = (1 + L1 * gamma_bar) * 3 * xi + (1 + gamma_bar) * L1 * (3 * xi) ** 2
        gap = ls - lu_s
        term_sigma = (L1 ** (1 + alpha) * (3 * xi) ** alpha
                      + L1 * (1 + gamma_bar) * xi * (1 + 3 * L1 * xi * (1 + gamma_bar)) ** alpha)
        checks.update({
            'clns': bool(np.all(np.exp(ls) + eps_check <= np.exp(ls + zeta))),
            'kn': bool(np.all(np.exp(gap + zeta) + L1 * (1 + L1 * gamma_bar) * xi + L1 ** 2 * xi ** 2
                              <= np.exp(gap + 2 * zeta))),
            'ens': bool(np.all(term_sigma <= np.exp(gap + delta) - np.exp(gap + zeta))),
        })
    return checks


def search_xi_gamma(lin: LinearData, alpha: float, delta: float, L: Optional[float] = None,
                    xi: float = None, gamma_bar: float = None) -> tuple:
    """
    Halve gamma_bar until the angle correction fits inside 2 zeta, then halve
    xi until every derived-rate inequality holds over the window, where
    (2 + alpha) zeta < delta.
    """
    L = lin.global_L() if L is None else L
    xi = config.PARAMETER_SEARCH['xi'] if xi is None else xi
    gamma_bar = config.PARAMETER_SEARCH['gamma_bar'] if gamma_bar is None else gamma_bar
    for _ in range(config.PARAMETER_SEARCH['halvings']):
        checks = _search_conditions(lin, alpha, delta, L, xi, gamma_bar)
        if all(checks.values()):
            logger.info("Parameter search: xi=%.4g gamma_bar=%.4g", xi, gamma_bar)
            return xi, gamma_bar
        if not checks['enchi']:
            gamma_bar *= 0.5
        else:
            xi *= 0.5
    raise SeedTooLarge('xi/gamma_bar search')


def suggest_seeds(lin: LinearData, series: EffectiveSeries, alpha: float, xi: float,
                  gamma_bar: float, beta_bar: float, kappa_factor: float = 1.0,
                  margin: float = 0.5) -> SeedSettings:
    """
    Seeds through the origin (tau_bar = sigma_bar = 0) with
    e^{L'} beta_bar r_bar^a <= xi, e^{L'} beta_bar <= xi kappa_bar and
    kappa_hat r_bar^a <= gamma_bar, where kappa_hat = kappa_factor * kappa_bar.
    """
    scale = np.exp(series.L_prime) * beta_bar
    kappa_bar = scale / xi
    kappa_hat = kappa_factor * kappa_bar
    r_bar = margin * min((xi / scale) ** (1 / alpha), (gamma_bar / kappa_hat) ** (1 / alpha))
    return SeedSettings(r_bar=r_bar, tau_bar=0.0, sigma_bar=0.0, kappa_bar=kappa_bar,
                        kappa_hat=kappa_hat, gamma_bar=gamma_bar, xi=xi, beta_bar=beta_bar)


def _clamped_recursion(lambda_e: np.ndarray, step: float, start: float) -> np.ndarray:
    c = np.empty(len(lambda_e) + 1)
    c[0] = start
    for n, rate in enumerate(lambda_e):
        c[n + 1] = min(np.exp(rate - step) * c[n], 1.0)
    return c


def build_params_theorem_d(lin: LinearData, series: EffectiveSeries, alpha: float,
                           rates: RateSettings, seeds: SeedSettings,
                           L: Optional[float] = None) -> ParamSeq:
    """
    Feasible parameters along an effectively hyperbolic window.

    c_0 = 1, c_{n+1} = min(e^{lambda^e_n - delta'} c_n, 1), delta' = delta/(2 alpha);
    c_hat follows the same recursion from c_hat_0 = (kappa_bar/kappa_hat)^{1/alpha}
    (= e^{-N chi_bar_u} for the default kappa_hat). Then

        r_n = r_bar c_n,   kappa_n = kappa_bar c_hat_n^{-alpha},
        tau_n = tau_bar e^{-M^s_0} e^{sum_{k<n}(lambda^s_k + delta')},
        sigma_n = kappa_hat c_n^{-alpha} tau_n^alpha,  gamma_n = sigma_n + kappa_n r_n^alpha.

    The construction meets the recursions with margin alpha delta' = delta/2,
    which is the delta stored on the result and used for the final check.
    """
    N = len(lin)
    if lin.beta[0] > seeds.beta_bar:
        raise PreconditionViolated("beta_0 must not exceed beta_bar")
    L = lin.global_L() if L is None else L
    delta = rates.default_delta()
    if delta <= 0:
        raise PreconditionViolated("delta must be positive")
    delta_prime = delta / (2.0 * alpha)
    delta_c = min(delta_prime, alpha * delta_prime)

    if seeds.xi is None or seeds.gamma_bar is None:
        xi, gamma_bar = search_xi_gamma(lin, alpha, delta_c, L)
        xi = seeds.xi if seeds.xi is not None else xi
        gamma_bar = seeds.gamma_bar if seeds.gamma_bar is not None else gamma_bar
    else:
        xi, gamma_bar = seeds.xi, seeds.gamma_bar

    kappa_hat = (seeds.kappa_bar * np.exp(alpha * N * rates.chi_bar_u)
                 if seeds.kappa_hat is None else seeds.kappa_hat)
    if kappa_hat < seeds.kappa_bar:
        raise SeedTooLarge('kappa_hat >= kappa_bar')
    if seeds.tau_bar > seeds.r_bar:
        raise SeedTooLarge('tau_bar <= r_bar')
    if kappa_hat * seeds.tau_bar ** alpha > seeds.sigma_bar * (1 + 1e-12):
        raise SeedTooLarge('kappa_hat tau_bar^alpha <= sigma_bar')
    if seeds.sigma_bar + kappa_hat * seeds.r_bar ** alpha > gamma_bar * (1 + 1e-12):
        raise SeedTooLarge('sigma_bar + kappa_hat r_bar^alpha <= gamma_bar')

    c = _clamped_recursion(series.lambda_e, delta_prime, 1.0)
    c_hat = _clamped_recursion(series.lambda_e, delta_prime,
                               (seeds.kappa_bar / kappa_hat) ** (1.0 / alpha))

    m_u = m_sequence(series, rates.chi_hat_u)
    stable = np.isfinite(lin.lambda_s)
    if np.any(stable) and rates.chi_hat_s is not None:
        partial = np.concatenate([[0.0], np.cumsum(np.where(stable, lin.lambda_s, 0.0))])
        m0_s = max(0.0, float(np.max(partial - np.arange(N + 1) * rates.chi_hat_s + m_u)))
        tau = (seeds.tau_bar * np.exp(-m0_s)
               * np.exp(np.concatenate([[0.0], np.cumsum(lin.lambda_s + delta_prime)])))
    else:
        m0_s = 0.0
        tau = np.zeros(N + 1)

    r = seeds.r_bar * c
    kappa = seeds.kappa_bar * c_hat ** (-alpha)
    sigma = kappa_hat * c ** (-alpha) * tau ** alpha
    gamma = sigma + kappa * r ** alpha

    extra = {
        'c_dominates_m': c >= np.exp(-m_u) * (1 - 1e-12),
        'theta_bound': np.sin(lin.theta[1:N + 1]) >= c[1:] ** alpha / seeds.beta_bar * (1 - 1e-12),
        'kappa_hat_window': kappa_hat <= seeds.kappa_bar * np.exp(alpha * np.arange(N + 1)
                                                                  * rates.chi_bar_u) * (1 + 1e-12),
    }
    if not np.all(extra['c_dominates_m']):
        logger.warning("c_n < e^{-M_n} at %d indices", int(np.sum(~extra['c_dominates_m'])))

    params = ParamSeq(lin.n_min, r, tau, sigma, kappa, gamma, alpha, delta_c, xi, gamma_bar,
                      c, c_hat, extra)
    report = check_theorem_c(lin, params)
    if not report.ok:
        name = report.failed()[0]
        raise SeedTooLarge(name, report.first_failure[name])
    logger.info("Built parameters on %d indices (M^s_0 = %.4g, delta = %.4g)", N, m0_s, delta_c)
    return params.with_flags(report.flags)


def hat_r(lin: LinearData, params: ParamSeq, n: int, delta: Optional[float] = None,
          xi: Optional[float] = None) -> float:
    """
    Radius of the part of psi_0 that determines psi_n:

        e^{sum_{k<n}(-lambda^u_k + delta)} r_n
          + 3 xi sum_{k<n} e^{sum_{j<k}(-lambda^u_j + delta)} tau_k
    """
    delta = params.delta if delta is None else delta
    xi = params.xi if xi is None else xi
    i = n - params.n_min
    growth = np.concatenate([[0.0], np.cumsum(-lin.lambda_u[:i] + delta)])
    head = np.exp(growth[i]) * params.r[i]
    if i == 0:
        return float(head)
    tail = 3.0 * xi * float(np.sum(np.exp(growth[:i]) * params.tau[:i]))
    return float(head + tail) if np.any(params.tau[:i]) else float(head)
