import logging
from typing import Optional

import numpy as np
from tqdm import tqdm

from src.germs.germ import GermSequence

logger = logging.getLogger(__name__)


def lyapunov_exponents(seq: GermSequence, steps: Optional[int] = None,
                       start: Optional[int] = None) -> np.ndarray:
    """
    Lyapunov spectrum of the linear cocycle Df_n(0) by repeated QR:
    the running sum of log|diag R| divided by the number of steps.
    Returned in decreasing order.
    """
    start = seq.n_min if start is None else start
    steps = seq.n_max - start + 1 if steps is None else steps
    zero = np.zeros(seq.dim)
    q = np.eye(seq.dim)
    sums = np.zeros(seq.dim)
    disable = logger.getEffectiveLevel() > logging.INFO or steps < 4096
    for n in tqdm(range(start, start + steps), desc='lyapunov', disable=disable):
        q, r = np.linalg.qr(seq[n].jacobian(zero) @ q)
        sums += np.log(np.abs(np.diag(r)))
    return np.sort(sums / steps)[::-1]
