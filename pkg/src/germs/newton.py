import logging
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

import config

logger = logging.getLogger(__name__)


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    history: List[float] = field(default_factory=list)


def newton_solve(residual: Callable[[np.ndarray], np.ndarray],
                 jacobian: Callable[[np.ndarray], np.ndarray],
                 x0: np.ndarray,
                 tol: float = None,
                 max_iter: int = None) -> NewtonResult:
    """
    Damped Newton iteration for residual(x) = 0.

    The full step is tried first and halved while the residual norm grows,
    down to NEWTON_SETTINGS['damping_floor']. Returns the last iterate even when
    not converged; callers decide whether that is fatal.
    """
    tol = config.TOLERANCES['newton'] if tol is None else tol
    max_iter = config.NEWTON_SETTINGS['max_iter'] if max_iter is None else max_iter
    damping_floor = config.NEWTON_SETTINGS['damping_floor']

    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    norm = float(np.linalg.norm(r))
    history = [norm]

    for i in range(1, max_iter + 1):
        if norm <= tol:
            return NewtonResult(x, i - 1, norm, True, history)
        try:
            step = np.linalg.solve(np.atleast_2d(jacobian(x)), -r)
        except np.linalg.LinAlgError:
            logger.debug("Singular Jacobian at Newton iterate %d", i)
            return NewtonResult(x, i, norm, False, history)

        damping = 1.0
        while True:
            trial = x + damping * step
            try:
                r_trial = np.asarray(residual(trial), dtype=float)
                norm_trial = float(np.linalg.norm(r_trial))
            except Exception:
                norm_trial = np.inf
            if norm_trial < norm or damping <= damping_floor:
                break
            damping *= 0.5

        if not np.isfinite(norm_trial):
            return NewtonResult(x, i, norm, False, history)
        # Stalled: the damped step no longer reduces the residual
        if norm_trial >= norm and norm > tol:
            return NewtonResult(x, i, norm, False, history)
        x, r, norm = trial, r_trial, norm_trial
        history.append(norm)

    return NewtonResult(x, max_iter, norm, norm <= tol, history)
