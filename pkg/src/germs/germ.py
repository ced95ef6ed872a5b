import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np

import config
from src.errors import DomainExit, NotAGerm, PreconditionViolated
from src.germs.newton import newton_solve

logger = logging.getLogger(__name__)

MapFn = Callable[[np.ndarray], np.ndarray]


def finite_difference_jacobian(func: MapFn, x: np.ndarray, step: float = None) -> np.ndarray:
    """Central differences with h = step * max(1, |x|)"""
    x = np.asarray(x, dtype=float)
    h = (config.FD_STEP if step is None else step) * max(1.0, float(np.linalg.norm(x)))
    columns = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        columns.append((np.asarray(func(x + e)) - np.asarray(func(x - e))) / (2.0 * h))
    return np.column_stack(columns)


@dataclass(frozen=True, eq=False)
class Germ:
    """A local diffeomorphism f with f(0) = 0 on an axis-aligned box"""
    dim: int
    func: MapFn
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    linear: bool = False
    label: str = ''
    fd_step: float = field(default=None)

    def __post_init__(self):
        lower = -np.ones(self.dim) if self.lower is None else np.broadcast_to(
            np.asarray(self.lower, dtype=float), (self.dim,)).copy()
        upper = np.ones(self.dim) if self.upper is None else np.broadcast_to(
            np.asarray(self.upper, dtype=float), (self.dim,)).copy()
        if np.any(lower >= 0) or np.any(upper <= 0):
            raise PreconditionViolated("Germ domain must contain the origin in its interior")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return np.atleast_2d(np.asarray(self.jac(x), dtype=float))
        return finite_difference_jacobian(self.func, x, self.fd_step)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    @property
    def half_width(self) -> float:
        """Radius of the largest ball around 0 inside the box"""
        return float(min(np.min(-self.lower), np.min(self.upper)))

    @classmethod
    def centered(cls, dim: int, func: MapFn, jac=None, lower=None, upper=None,
                 linear: bool = False, label: str = '') -> 'Germ':
        """
        Build a germ from a map that fixes a point near the origin.

        Maps with |f(0)| within the fixed-point tolerance are used as they are.
        Otherwise the fixed point nearest 0 is located by Newton and the map is
        conjugated by that translation if the point lies within
        TOLERANCES['fixed_point_translate'], and rejected if not.
        """
        probe = cls(dim, func, jac, lower, upper, linear, label)
        if np.linalg.norm(probe(np.zeros(dim))) <= config.TOLERANCES['fixed_point']:
            return probe

        eye = np.eye(dim)
        result = newton_solve(lambda x: probe(x) - x, lambda x: probe.jacobian(x) - eye,
                              np.zeros(dim))
        offset = float(np.linalg.norm(result.x))
        if not result.converged or offset > config.TOLERANCES['fixed_point_translate']:
            raise NotAGerm(offset)

        p = result.x.copy()
        logger.info("Translated map %s by its fixed point (offset %.2e)", label or '<anon>', offset)
        shifted_jac = None if jac is None else (lambda x, _j=jac: _j(x + p))
        return cls(dim, lambda x, _f=func: np.asarray(_f(x + p)) - p, shifted_jac,
                   probe.lower - p, probe.upper - p, linear, label)

    def inverse(self, domain: Optional['Germ'] = None) -> 'Germ':
        """
        The inverse germ, evaluated by Newton seeded with Df(0)^{-1}y.

        The inverse is defined on the box of `domain` (default: this germ's own
        box). Points whose preimage cannot be found raise DomainExit(at=-1).
        """
        box = self if domain is None else domain
        inv0 = np.linalg.inv(self.jacobian(np.zeros(self.dim)))
        forward = self

        def solve(y):
            y = np.asarray(y, dtype=float)
            if forward.linear:
                return inv0 @ y
            result = newton_solve(lambda x: forward(x) - y, forward.jacobian, inv0 @ y)
            if not result.converged:
                raise DomainExit(at=-1)
            return result.x

        def jac(y):
            return np.linalg.inv(forward.jacobian(solve(y)))

        return Germ(self.dim, solve, jac, box.lower, box.upper, self.linear,
                    f"inverse({self.label})")


class GermSequence:
    """
    Indexed family {f_n : n_min <= n <= n_max}, each f_n taking V_n to V_{n+1}.

    Germs are supplied either as a list (indexed from n_min) or as a factory
    n -> Germ; factory results are memoised so repeated access is cheap.
    """

    def __init__(self, germs: Union[Sequence[Germ], Callable[[int], Germ]],
                 n_min: int = 0, n_max: Optional[int] = None,
                 alpha: float = 1.0, L: Optional[float] = None, label: str = ''):
        if not 0.0 < alpha <= 1.0:
            raise PreconditionViolated(f"Hölder exponent must lie in (0, 1], got {alpha}")
        if callable(germs):
            if n_max is None:
                raise PreconditionViolated("A germ factory needs an explicit n_max")
            self._factory = lru_cache(maxsize=None)(germs)
        else:
            germs = list(germs)
            if n_max is None:
                n_max = n_min + len(germs) - 1
            if len(germs) != n_max - n_min + 1:
                raise PreconditionViolated("Number of germs does not match the index range")
            self._factory = lambda n, _g=tuple(germs), _o=n_min: _g[n - _o]
        if n_max < n_min:
            raise PreconditionViolated("Empty germ sequence")
        self.n_min = n_min
        self.n_max = n_max
        self.alpha = alpha
        self.L = L
        self.label = label
        self.dim = self[n_min].dim

    def __getitem__(self, n: int) -> Germ:
        if not self.n_min <= n <= self.n_max:
            raise IndexError(f"Index {n} outside [{self.n_min}, {self.n_max}]")
        return self._factory(n)

    def __len__(self):
        return self.n_max - self.n_min + 1

    @property
    def indices(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def restrict(self, n_min: int, n_max: int) -> 'GermSequence':
        if n_min < self.n_min or n_max > self.n_max:
            raise IndexError("Restriction must stay inside the index range")
        return GermSequence(self._factory, n_min, n_max, self.alpha, self.L, self.label)

    def with_L(self, L: float) -> 'GermSequence':
        return GermSequence(self._factory, self.n_min, self.n_max, self.alpha, L, self.label)

    def __repr__(self):
        return f"GermSequence({self.label or 'unnamed'}, [{self.n_min}, {self.n_max}], d={self.dim})"


def compose(seq: GermSequence, m: int, n: int, x) -> np.ndarray:
    """F_{m,n}(x) = f_{n-1} o ... o f_m (x); identity when m == n"""
    if n < m:
        raise PreconditionViolated(f"compose needs m <= n, got m={m}, n={n}")
    x = np.asarray(x, dtype=float)
    for k in range(m, n):
        germ = seq[k]
        if not germ.contains(x):
            raise DomainExit(at=k)
        x = germ(x)
    return x


def orbit(seq: GermSequence, m: int, n: int, x) -> np.ndarray:
    """Rows x_m, ..., x_n of the forward orbit"""
    points = [np.asarray(x, dtype=float)]
    for k in range(m, n):
        points.append(compose(seq, k, k + 1, points[-1]))
    return np.vstack(points)


def compose_jacobian(seq: GermSequence, m: int, n: int, x) -> np.ndarray:
    """DF_{m,n}(x) by the chain rule along the orbit"""
    x = np.asarray(x, dtype=float)
    product = np.eye(seq.dim)
    for k in range(m, n):
        germ = seq[k]
        if not germ.contains(x):
            raise DomainExit(at=k)
        product = germ.jacobian(x) @ product
        x = germ(x)
    return product


def inverse_sequence(seq: GermSequence) -> GermSequence:
    """
    Index-reversal adapter: g_j = f_{-j-1}^{-1}, j in [-n_max-1, -n_min-1].

    g_j maps V'_j = V_{-j} to V'_{j+1} = V_{-j-1}, so forward machinery run on
    the adapted sequence walks the original one backwards.
    """
    def factory(j, _seq=seq):
        return _seq[-j - 1].inverse()

    return GermSequence(factory, -seq.n_max - 1, -seq.n_min - 1, seq.alpha, seq.L,
                        f"reversed({seq.label})")
