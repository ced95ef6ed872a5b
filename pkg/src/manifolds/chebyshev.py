import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.chebyshev import chebpts2

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def _reference_nodes(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes = chebpts2(degree + 1)
    weights = np.ones(degree + 1)
    weights[1::2] = -1.0
    weights[0] *= 0.5
    weights[-1] *= 0.5
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def chebyshev_nodes(degree: int, radius: float) -> np.ndarray:
    """Extrema points radius * cos(pi j / degree), ascending, endpoints included"""
    return radius * _reference_nodes(degree)[0]


def barycentric_weights(degree: int) -> np.ndarray:
    """(-1)^j, halved at both endpoints; the common scale cancels in the formula"""
    return _reference_nodes(degree)[1].copy()


def differentiation_matrix(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """D with (D @ f)_i = p'(x_i) for the interpolant p of f"""
    c = nodes[:, np.newaxis] - nodes
    np.fill_diagonal(c, 1.0)
    c = weights / (c * weights[:, np.newaxis])
    np.fill_diagonal(c, 0.0)
    np.fill_diagonal(c, -c.sum(axis=1))
    return c


def interpolation_matrix(points, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """
    Rows of Lagrange basis values at `points`, so that
    interpolation_matrix(x, ...) @ f is the interpolant at x.
    Points that coincide with a node pick that node's value exactly.
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    diff = points[:, np.newaxis] - nodes
    exact = np.abs(diff) < 1e-15 * max(1.0, float(np.abs(nodes).max()))
    hit = exact.any(axis=1)
    diff[exact] = 1.0
    terms = weights / diff
    basis = terms / terms.sum(axis=1, keepdims=True)
    if hit.any():
        basis[hit] = exact[hit].astype(float)
    return basis


def tensor_grid(axis_nodes: np.ndarray, dim: int) -> np.ndarray:
    """All points of the tensor grid, flattened in C order, shape (n^dim, dim)"""
    mesh = np.meshgrid(*([axis_nodes] * dim), indexing='ij')
    return np.stack([m.ravel() for m in mesh], axis=-1)


def tensor_interpolate(points: np.ndarray, axis_nodes: np.ndarray, weights: np.ndarray,
                       values: np.ndarray) -> np.ndarray:
    """
    Evaluate a tensor-product interpolant.

    points: (m, dim); values: (n^dim, *tail) in tensor_grid order.
    Returns (m, *tail).
    """
    points = np.atleast_2d(points)
    m, dim = points.shape
    n = len(axis_nodes)
    tail = values.shape[1:]
    grid = values.reshape((n,) * dim + (-1,))
    result = []
    for point in points:
        reduced = grid
        for axis in range(dim):
            row = interpolation_matrix(point[axis], axis_nodes, weights)[0]
            reduced = np.tensordot(row, reduced, axes=(0, 0))
        result.append(reduced)
    return np.asarray(result).reshape((m,) + tail)


def tensor_differentiate(values: np.ndarray, dmat: np.ndarray, dim: int, axis: int) -> np.ndarray:
    """Apply the differentiation matrix along one grid axis of tensor data"""
    n = dmat.shape[0]
    tail = values.shape[1:]
    grid = values.reshape((n,) * dim + (-1,))
    moved = np.moveaxis(grid, axis, 0)
    out = np.einsum('ij,j...->i...', dmat, moved)
    return np.moveaxis(out, 0, axis).reshape((n ** dim,) + tail)
