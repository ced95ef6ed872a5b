import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.errors import PreconditionViolated, RateOverflow
from src.germs.linear_data import LinearData

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DerivedRates:
    """
    Nonlinear corrections of the linear rates for the Hölder modulus
    Z(t) = beta_n t^alpha. Arrays are indexed by position 0..N-1.

    rho_n(t) = rho_c1[n] t^alpha + rho_c2[n] t^(2 alpha).
    """
    n_min: int
    eps_f: np.ndarray
    eps_u: np.ndarray
    eps_s: np.ndarray
    eps_chi: np.ndarray
    eps_check: np.ndarray
    eps_sigma: np.ndarray
    lambda_hat_u: np.ndarray
    lambda_hat_s: np.ndarray
    lambda_check_s: np.ndarray
    chi: np.ndarray
    rho_c1: np.ndarray
    rho_c2: np.ndarray

    def rho(self, n: int, t: float, alpha: float) -> float:
        return float(self.rho_c1[n] * t ** alpha + self.rho_c2[n] * t ** (2 * alpha))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'n': np.arange(self.n_min, self.n_min + len(self.eps_f)),
            'eps_f': self.eps_f,
            'lambda_hat_u': self.lambda_hat_u,
            'lambda_hat_s': self.lambda_hat_s,
            'lambda_check_s': self.lambda_check_s,
            'chi': self.chi,
            'eps_sigma': self.eps_sigma,
        })


def derived_rates(lin: LinearData, params, nonlinear: bool = True) -> DerivedRates:
    """
    Evaluate the nonlinear rate corrections along a parameter sequence.

    With nonlinear=False the modulus is taken identically zero, which is the
    exact statement for linear germs.
    """
    N = len(lin)
    if len(params) < N + 1:
        raise PreconditionViolated("Parameter sequence must have one more entry than the data")
    alpha = params.alpha
    r, tau, gamma, kappa = params.r[:N + 1], params.tau[:N + 1], params.gamma[:N + 1], params.kappa[:N + 1]
    beta = lin.beta if nonlinear else np.zeros(N)
    sin_next = np.sin(lin.theta[1:N + 1])
    exp_u = np.exp(lin.lambda_u)
    exp_s = np.exp(lin.lambda_s)

    def modulus(t):
        return beta * np.power(t, alpha)

    eps_f = modulus(tau[:N] + r[:N] * (1.0 + gamma[:N]))
    budget = exp_u / (1.0 + gamma[:N])
    bad = np.nonzero(eps_f >= budget)[0]
    if bad.size:
        i = int(bad[0])
        raise RateOverflow(lin.n_min + i, float(eps_f[i]), float(budget[i]))

    eps_u = (1.0 + gamma[:N]) * eps_f
    exp_hat_u = exp_u - eps_u
    lambda_hat_u = np.log(exp_hat_u)

    with np.errstate(divide='ignore'):
        spread = np.maximum(1.0 + 1.0 / gamma[:N], 1.0 + gamma[1:N + 1])
    eps_s = np.where(eps_f > 0, spread * eps_f, 0.0)
    with np.errstate(divide='ignore'):
        lambda_hat_s = np.log(exp_s + eps_s)

    eps_chi = np.log(np.maximum((1.0 - gamma[1:N + 1]) / (1.0 + gamma[:N]),
                                sin_next / (1.0 + gamma[:N])))
    if np.any(eps_chi > 0):
        logger.warning("Angle correction is positive at %d indices", int(np.sum(eps_chi > 0)))
    chi = lambda_hat_u + eps_chi

    ratio_s = exp_s / exp_hat_u
    eps_check = (1.0 + ratio_s * gamma[:N]) * eps_f + (1.0 + gamma[:N]) * eps_f ** 2 / exp_hat_u
    with np.errstate(divide='ignore'):
        lambda_check_s = np.log(exp_s + eps_check)

    rho_c1 = (1.0 + ratio_s * gamma[:N]) * beta / exp_hat_u
    rho_c2 = beta ** 2 / exp_hat_u ** 2

    tau_n = tau[:N]
    eps_sigma = (ratio_s * kappa[:N] * np.power(eps_f * tau_n / exp_hat_u, alpha)
                 + (1.0 + gamma[:N]) / exp_hat_u
                 * modulus((1.0 + eps_f * (1.0 + gamma[:N]) / exp_hat_u) * tau_n))

    return DerivedRates(lin.n_min, eps_f, eps_u, eps_s, eps_chi, eps_check, eps_sigma,
                        lambda_hat_u, lambda_hat_s, lambda_check_s, chi, rho_c1, rho_c2)
