import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

import config
from src.errors import PreconditionViolated
from src.germs.linear_data import LinearData

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EffectiveSeries:
    """Domination defect, effective rate and threshold flags per index"""
    n_min: int
    delta: np.ndarray
    lambda_e: np.ndarray
    beta_flag: np.ndarray
    beta_bar: float
    alpha: float
    L_prime: float
    missing_predecessor: bool = False

    def __len__(self):
        return len(self.lambda_e)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + len(self))

    def lower_bound_holds(self) -> bool:
        return bool(np.all(self.lambda_e >= -self.L_prime))


def effective_series(lin: LinearData, alpha: float, beta_bar: float,
                     L: Optional[float] = None) -> EffectiveSeries:
    """
    Delta_n = max(0, (lambda^s - lambda^u)/alpha) and

        lambda^e_n = lambda^u_n - Delta_n                                  if beta_n <= beta_bar
        lambda^e_n = min(lambda^u_n - Delta_n, log(beta_{n-1}/beta_n)/alpha) otherwise

    The first index has no predecessor and always takes the first branch.
    """
    if np.any(lin.beta < 1.0):
        raise PreconditionViolated("beta_n must be at least 1")
    L = lin.global_L() if L is None else L
    with np.errstate(invalid='ignore'):
        delta = np.maximum(0.0, (lin.lambda_s - lin.lambda_u) / alpha)
    delta = np.nan_to_num(delta, nan=0.0, neginf=0.0)
    base = lin.lambda_u - delta
    flag = lin.beta > beta_bar

    lambda_e = base.copy()
    if len(base) > 1:
        decay = np.log(lin.beta[:-1] / lin.beta[1:]) / alpha
        lambda_e[1:] = np.where(flag[1:], np.minimum(base[1:], decay), base[1:])

    missing = bool(flag[0])
    if missing:
        logger.warning("beta_%d exceeds the threshold but beta_%d is unavailable; "
                       "using lambda^u - Delta at the range start", lin.n_min, lin.n_min - 1)

    series = EffectiveSeries(lin.n_min, delta, lambda_e, flag.astype(int), beta_bar, alpha,
                             (1.0 + 1.0 / alpha) * L, missing)
    if not series.lower_bound_holds():
        logger.warning("Effective rate drops below -L' = %.4f (min %.4f)",
                       -series.L_prime, float(lambda_e.min()))
    return series


def _shortfall_prefix(rates: np.ndarray, chi_hat: float) -> np.ndarray:
    """P_n = sum_{j<n} (rate_j - chi_hat), n = 0..N"""
    return np.concatenate([[0.0], np.cumsum(np.asarray(rates, dtype=float) - chi_hat)])


def _rates(series) -> np.ndarray:
    return series.lambda_e if isinstance(series, EffectiveSeries) else np.asarray(series, dtype=float)


def eht_detect(series, chi_hat: float) -> np.ndarray:
    """
    Effective hyperbolic times: n in 1..N with every trailing average
    (1/(n-k)) sum_{j=k}^{n-1} lambda^e_j >= chi_hat for 0 <= k < n.

    Positions are counted from the start of the series. Equivalent to the
    prefix sum P_n dominating all earlier P_k.
    """
    if chi_hat <= 0:
        raise PreconditionViolated("chi_hat must be positive")
    prefix = _shortfall_prefix(_rates(series), chi_hat)
    running_max = np.maximum.accumulate(prefix)[:-1]
    n = np.arange(1, len(prefix))
    return n[prefix[1:] >= running_max]


def eht_detect_bruteforce(series, chi_hat: float) -> np.ndarray:
    """Quadratic evaluation of the defining inequality, for cross-checks"""
    rates = _rates(series)
    prefix = _shortfall_prefix(rates, chi_hat)
    times = [n for n in range(1, len(rates) + 1)
             if all(prefix[n] - prefix[k] >= 0.0 for k in range(n))]
    return np.asarray(times, dtype=int)


def hyperbolic_times(lin: LinearData, chi_hat: float) -> np.ndarray:
    """Same test with lambda^u in place of lambda^e; contains eht_detect's set"""
    return eht_detect(lin.lambda_u, chi_hat)


def m_sequence(series, chi_hat: float) -> np.ndarray:
    """
    M_n = max(0, max_{m<n} [(n-m) chi_hat - sum_{k=m}^{n-1} lambda^e_k]), n = 0..N.

    Over a finite window the backward constant sup_{m<=n} takes the same form
    with m ranging from the window start.
    """
    prefix = _shortfall_prefix(_rates(series), chi_hat)
    result = np.zeros(len(prefix))
    result[1:] = np.maximum(0.0, np.maximum.accumulate(prefix)[:-1] - prefix[1:])
    return result


def m_sequence_bruteforce(series, chi_hat: float) -> np.ndarray:
    rates = _rates(series)
    prefix = _shortfall_prefix(rates, chi_hat)
    return np.asarray([max([0.0] + [prefix[m] - prefix[n] for m in range(n)])
                       for n in range(len(rates) + 1)])


def m_upper_bound(lin: LinearData, series: EffectiveSeries, chi_hat: float) -> np.ndarray:
    """
    Upper bound for M_n from threshold exceedances: the same running maximum
    with lambda^u - Delta - 2L' 1_k(beta_bar) in place of lambda^e.
    """
    penalised = lin.lambda_u - series.delta - 2.0 * series.L_prime * series.beta_flag
    return m_sequence(penalised, chi_hat)


def _window_averages(values: np.ndarray, min_len: int) -> np.ndarray:
    prefix = np.concatenate([[0.0], np.cumsum(values)])
    lengths = np.arange(max(1, min_len), len(values) + 1)
    return prefix[lengths] / lengths


def _liminf_estimate(values: np.ndarray) -> float:
    if not np.all(np.isfinite(values)):
        return float(np.inf) if np.all(values == np.inf) else float(np.nan)
    return float(np.min(_window_averages(values, len(values) // 4)))


def _limsup_estimate(values: np.ndarray) -> float:
    if np.all(values == -np.inf):
        return float(-np.inf)
    return float(np.max(_window_averages(values, len(values) // 4)))


@dataclass
class BetaDensityReport:
    """Exceedance-density verification of effective hyperbolicity"""
    chi_u: float
    L_prime: float
    candidates: np.ndarray
    densities: np.ndarray
    implied_bounds: np.ndarray
    best_beta_bar: float
    best_bound: float
    effectively_hyperbolic: bool
    window: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'beta_bar': self.candidates, 'density': self.densities,
                             'implied_bound': self.implied_bounds})


def verify_via_beta_density(lin: LinearData, alpha: float, window: Optional[int] = None,
                            L: Optional[float] = None,
                            keep_fraction: float = None) -> BetaDensityReport:
    """
    chi^u = <lambda^u - Delta> over the window; for each candidate threshold
    beta_bar the exceedance density delta(beta_bar) gives the lower bound
    chi^u - delta(beta_bar) L' on the average effective rate.

    The reported threshold is the smallest candidate whose bound keeps
    `keep_fraction` of chi^u (the largest bound when chi^u <= 0).
    """
    keep_fraction = config.BETA_BAR_KEEP_FRACTION if keep_fraction is None else keep_fraction
    window = len(lin) if window is None else min(window, len(lin))
    lin = lin.window(lin.n_min, lin.n_min + window)
    L = lin.global_L() if L is None else L
    L_prime = (1.0 + 1.0 / alpha) * L
    with np.errstate(invalid='ignore'):
        delta = np.nan_to_num(np.maximum(0.0, (lin.lambda_s - lin.lambda_u) / alpha),
                              nan=0.0, neginf=0.0)
    chi_u = float(np.mean(lin.lambda_u - delta))

    candidates = np.unique(lin.beta)
    densities = np.asarray([np.mean(lin.beta > b) for b in candidates])
    bounds = chi_u - densities * L_prime
    if chi_u > 0:
        good = np.nonzero(bounds >= keep_fraction * chi_u)[0]
        best = int(good[0]) if good.size else int(np.argmax(bounds))
    else:
        best = int(np.argmax(bounds))
    report = BetaDensityReport(chi_u, L_prime, candidates, densities, bounds,
                               float(candidates[best]), float(bounds[best]),
                               bool(bounds[best] > 0), window)
    logger.info("beta-density check: chi_u=%.4f best beta_bar=%.3g bound=%.4f",
                chi_u, report.best_beta_bar, report.best_bound)
    return report


class EffectiveReport(BaseModel):
    """Summary of effective hyperbolicity over a finite window"""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    chi_e: float
    chi_g: float
    chi_s: float
    chi_hat: float
    chi_hat_fallback: bool = False
    beta_bar: float
    L: float
    density_lb: float
    gamma_count: int
    window: int
    effectively_hyperbolic: bool
    missing_predecessor: bool = False
    gamma_set: List[int] = []
    m_seq: List[float] = []

    def summary(self) -> dict:
        """Fields written to the report JSON"""
        return self.model_dump(include={'chi_e', 'chi_g', 'chi_s', 'chi_hat', 'beta_bar',
                                        'density_lb', 'gamma_count', 'effectively_hyperbolic',
                                        'missing_predecessor', 'chi_hat_fallback'})


def effective_report(lin: LinearData, series: EffectiveSeries,
                     chi_hat: Optional[float] = None, L: Optional[float] = None) -> EffectiveReport:
    """chi estimates are extremes of prefix averages over windows of length >= N/4"""
    L = lin.global_L() if L is None else L
    chi_e = _liminf_estimate(series.lambda_e)
    chi_g = _liminf_estimate(lin.lambda_u - lin.lambda_s)
    chi_s = _limsup_estimate(lin.lambda_s)

    fallback = False
    if chi_hat is None:
        if chi_e > 0:
            chi_hat = config.CHI_HAT_FRACTION * chi_e
        else:
            chi_hat, fallback = config.CHI_HAT_FALLBACK, True

    gamma = eht_detect(series, chi_hat) + series.n_min
    m_seq = m_sequence(series, chi_hat)
    density = (chi_e - chi_hat) / (L - chi_hat) if L > chi_hat else 0.0

    return EffectiveReport(
        chi_e=chi_e, chi_g=chi_g, chi_s=chi_s, chi_hat=chi_hat, chi_hat_fallback=fallback,
        beta_bar=series.beta_bar, L=L, density_lb=density, gamma_count=int(len(gamma)),
        window=len(series), effectively_hyperbolic=bool(chi_e > 0),
        missing_predecessor=series.missing_predecessor,
        gamma_set=[int(n) for n in gamma], m_seq=[float(m) for m in m_seq],
    )


def shortfall_columns(series, chi_hat: float) -> dict:
    """
    Time-aligned columns for the rate tables. Row p holds the rate of the
    p-th germ and the state at time p + 1 reached after applying it, so the
    rows cover times 1..N and M_n == 0 exactly on the rows with in_gamma == 1.
    """
    m_seq = m_sequence(series, chi_hat)
    gamma = set(eht_detect(series, chi_hat).tolist())
    times = np.arange(1, len(m_seq))
    return {
        'time': times,
        'M_n': m_seq[1:],
        'in_gamma': [int(t in gamma) for t in times],
    }


def series_frame(series: EffectiveSeries, chi_hat: float) -> pd.DataFrame:
    """CSV layout: n, delta, lambda_e, beta_flag, time, M_n, in_gamma"""
    return pd.DataFrame({
        'n': series.indices,
        'delta': series.delta,
        'lambda_e': series.lambda_e,
        'beta_flag': series.beta_flag,
        **shortfall_columns(series, chi_hat),
    })

