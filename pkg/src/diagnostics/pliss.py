import logging
from dataclasses import dataclass

import numpy as np

import config
from src.diagnostics.effective import eht_detect
from src.errors import PreconditionViolated

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PlissResult:
    times: np.ndarray
    rho: float
    guaranteed: float

    @property
    def count(self) -> int:
        return int(len(self.times))


def pliss(lambdas, L: float, chi: float, chi_hat: float) -> PlissResult:
    """
    Times n_i in 1..N with sum_{j=n+1}^{n_i} lambda_j >= chi_hat (n_i - n)
    for every 0 <= n < n_i, where lambdas[0] is lambda_1.

    Requires sum(lambda) >= chi N, lambda_j <= L and L >= chi > chi_hat > 0;
    then at least rho N such times exist, rho = (chi - chi_hat)/(L - chi_hat).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    N = len(lambdas)
    if not L >= chi > chi_hat > 0:
        raise PreconditionViolated("pliss needs L >= chi > chi_hat > 0")
    if np.any(lambdas > L):
        raise PreconditionViolated(f"Some lambda_j exceed the cap L = {L}")
    total = float(np.sum(lambdas))
    if total < chi * N - config.TOLERANCES['rate'] * max(1.0, abs(chi * N)):
        raise PreconditionViolated(f"Average {total / N:.6g} is below chi = {chi}")

    rho = (chi - chi_hat) / (L - chi_hat) if L > chi_hat else 1.0
    times = eht_detect(lambdas, chi_hat)
    if len(times) < rho * N - 1e-9 * N:
        logger.error("Only %d times found, fewer than rho N = %.3f", len(times), rho * N)
    return PlissResult(times, rho, rho * N)


def pliss_bruteforce(lambdas, chi_hat: float) -> np.ndarray:
    """Direct evaluation of the defining inequality with slice sums"""
    lambdas = np.asarray(lambdas, dtype=float)
    N = len(lambdas)
    return np.asarray([ni for ni in range(1, N + 1)
                       if all(np.sum(lambdas[n:ni]) >= chi_hat * (ni - n) for n in range(ni))],
                      dtype=int)
