import logging
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from src.catalog.charts import ChartedOrbit, chart_adapter
from src.errors import PreconditionViolated, UnknownBuiltin
from src.germs.germ import Germ, GermSequence
from src.germs.splitting import Splitting

logger = logging.getLogger(__name__)

CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])

DEFAULT_LENGTH = 100
PLISS_LENGTH = 2 ** 14
ALTERNATING_LENGTH = 10 ** 4


def _diagonal_germ(rates, box: float, label: str) -> Germ:
    diag = np.diag(np.asarray(rates, dtype=float))
    return Germ(len(diag), lambda x, _d=diag: _d @ x, lambda x, _d=diag: _d, -box, box,
                linear=True, label=label)


def _range(params: Dict[str, Any], n_min: int, n_max: Optional[int], length: int) -> Tuple[int, int]:
    if n_max is None:
        n_max = n_min + int(params.get('length', length)) - 1
    return n_min, n_max


def diag_linear(params: Dict[str, Any], n_min: int, n_max: Optional[int]):
    """(x, y) -> (mu x, lam y)"""
    mu, lam = float(params.get('mu', 2.0)), float(params.get('lam', 0.5))
    if not (abs(mu) > 1.0 > abs(lam) > 0.0):
        raise PreconditionViolated("diag_linear needs |mu| > 1 > |lam| > 0")
    n_min, n_max = _range(params, n_min, n_max, DEFAULT_LENGTH)
    germ = _diagonal_germ([mu, lam], float(params.get('box', 1.0)), f"diag({mu}, {lam})")
    seq = GermSequence(lambda n: germ, n_min, n_max, label='diag_linear')
    return seq, Splitting.coordinate(2, 1, n_min, n_max + 1)


def alt_3_half(params: Dict[str, Any], n_min: int, n_max: Optional[int]):
    """
    (3x, y/2) at even indices, (x/2, 3y) at odd ones. Every vector is taken
    as unstable, so the weakest expansion is log(1/2) at every step while
    the two-step products expand x and y by 3/2.
    """
    box = float(params.get('box', 1.0))
    even = _diagonal_germ([3.0, 0.5], box, 'alt_even')
    odd = _diagonal_germ([0.5, 3.0], box, 'alt_odd')
    n_min, n_max = _range(params, n_min, n_max, ALTERNATING_LENGTH)
    seq = GermSequence(lambda n: even if n % 2 == 0 else odd, n_min, n_max, label='alt_3_half')
    return seq, Splitting.constant(np.eye(2), np.zeros((2, 0)), n_min, n_max + 1)


def pliss_rate(n: int, high: float = 4.0, low: float = -3.0) -> float:
    """high on [2^k, 2^k + 2^{k-1}), low on [2^k + 2^{k-1}, 2^{k+1}); high for n < 2"""
    if n < 2:
        return high
    k = int(n).bit_length() - 1
    return high if n < (1 << k) + (1 << (k - 1)) else low


def pliss_blocks(params: Dict[str, Any], n_min: int, n_max: Optional[int]):
    """
    x -> e^{lambda_n} x with dyadic blocks of expansion and contraction.
    With `embed` the germs are (e^{lambda_n} x, y/2) on the plane.
    """
    high, low = float(params.get('high', 4.0)), float(params.get('low', -3.0))
    embed = bool(params.get('embed', False))
    box = float(params.get('box', 1.0))
    n_min, n_max = _range(params, n_min, n_max, PLISS_LENGTH)
    if n_min < 0:
        raise PreconditionViolated("pliss_blocks is indexed from 0")
    germs = {rate: _diagonal_germ([np.exp(rate), 0.5] if embed else [np.exp(rate)], box,
                                  f"pliss({rate})")
             for rate in (high, low)}
    seq = GermSequence(lambda n: germs[pliss_rate(n, high, low)], n_min, n_max,
                       label='pliss_blocks')
    if embed:
        return seq, Splitting.coordinate(2, 1, n_min, n_max + 1)
    return seq, Splitting.constant(np.eye(1), np.zeros((1, 0)), n_min, n_max + 1)


def quad_hyperbolic(params: Dict[str, Any], n_min: int, n_max: Optional[int]):
    """(x, y) -> (2x + y^2, y/2 + x^2) with the coordinate splitting"""
    box = float(params.get('box', 0.5))

    def func(z):
        x, y = z
        return np.array([2.0 * x + y * y, 0.5 * y + x * x])

    def jac(z):
        x, y = z
        return np.array([[2.0, 2.0 * y], [2.0 * x, 0.5]])

    germ = Germ(2, func, jac, -box, box, label='quad_hyperbolic')
    n_min, n_max = _range(params, n_min, n_max, DEFAULT_LENGTH)
    seq = GermSequence(lambda n: germ, n_min, n_max, label='quad_hyperbolic')
    return seq, Splitting.coordinate(2, 1, n_min, n_max + 1)


def uniform_setting(params: Dict[str, Any], n_min: int, n_max: Optional[int]):
    """
    (x, y) -> (mu x + eps (1 - cos y), lam y + eps (1 - cos x)): a uniformly
    hyperbolic linear part plus a perturbation that is C^1-small near 0.
    """
    mu, lam = float(params.get('mu', 2.0)), float(params.get('lam', 0.5))
    eps = float(params.get('eps', 0.05))
    box = float(params.get('box', 0.5))
    if not (abs(mu) > 1.0 > abs(lam) > 0.0):
        raise PreconditionViolated("uniform_setting needs |mu| > 1 > |lam| > 0")

    def func(z):
        x, y = z
        return np.array([mu * x + eps * (1.0 - np.cos(y)), lam * y + eps * (1.0 - np.cos(x))])

    def jac(z):
        x, y = z
        return np.array([[mu, eps * np.sin(y)], [eps * np.sin(x), lam]])

    germ = Germ(2, func, jac, -box, box, label='uniform_setting')
    n_min, n_max = _range(params, n_min, n_max, DEFAULT_LENGTH)
    seq = GermSequence(lambda n: germ, n_min, n_max, label='uniform_setting')
    return seq, Splitting.coordinate(2, 1, n_min, n_max + 1)


def cat_orbit(point=None, length: int = 1, orbit=None, n_min: int = 0,
              box: float = 0.25) -> ChartedOrbit:
    """
    Germs of the automorphism of the torus induced by [[2, 1], [1, 1]].

    The orbit is either supplied (`orbit`, rows mod 1) or generated from
    `point` for `length` steps. Chart frames are the identity.
    """
    if orbit is None:
        x = np.mod(np.zeros(2) if point is None else np.asarray(point, dtype=float), 1.0)
        rows = [x]
        for _ in range(length):
            rows.append(np.mod(CAT_MATRIX @ rows[-1], 1.0))
        orbit = np.vstack(rows)
    return chart_adapter(lambda x: CAT_MATRIX @ x, orbit, jac=lambda x: CAT_MATRIX, torus=True,
                         n_min=n_min, linear=True, box=box, label='cat_germ')


def cat_germ(params: Dict[str, Any], n_min: int, n_max: Optional[int]):
    length = int(params.get('length', 1)) if n_max is None else n_max - n_min + 1
    chart = cat_orbit(params.get('point'), length, params.get('orbit'), n_min,
                      float(params.get('box', 0.25)))
    return chart.seq, chart.split


BUILTINS: Dict[str, Callable] = {
    'diag_linear': diag_linear,
    'alt_3_half': alt_3_half,
    'pliss_blocks': pliss_blocks,
    'quad_hyperbolic': quad_hyperbolic,
    'cat_germ': cat_germ,
    'uniform_setting': uniform_setting,
}


def builtin(name: str, params: Optional[Dict[str, Any]] = None, n_min: int = 0,
            n_max: Optional[int] = None, alpha: float = 1.0) -> Tuple[GermSequence, Splitting]:
    """Germ sequence and splitting of a named test system"""
    if name not in BUILTINS:
        raise UnknownBuiltin(name)
    seq, split = BUILTINS[name](dict(params or {}), n_min, n_max)
    if alpha != seq.alpha:
        seq = GermSequence(seq._factory, seq.n_min, seq.n_max, alpha, seq.L, seq.label)
    logger.info("Built %s on [%d, %d]", name, seq.n_min, seq.n_max)
    return seq, split
