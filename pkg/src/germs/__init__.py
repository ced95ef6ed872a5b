"""Germ sequences, invariant splittings and their linear data"""

from .germ import Germ, GermSequence, compose, compose_jacobian, inverse_sequence, orbit
from .linear_data import HolderEstimate, LinearData, extract_linear_data, holder_estimate
from .newton import NewtonResult, newton_solve
from .split_map import SplitMap, nonlinear_split
from .splitting import (ConeField, Splitting, cones_to_splitting, minimal_angle,
                        orthonormalize, subspace_distance)

__all__ = [
    'Germ', 'GermSequence', 'compose', 'compose_jacobian', 'inverse_sequence', 'orbit',
    'HolderEstimate', 'LinearData', 'extract_linear_data', 'holder_estimate',
    'NewtonResult', 'newton_solve',
    'SplitMap', 'nonlinear_split',
    'ConeField', 'Splitting', 'cones_to_splitting', 'minimal_angle', 'orthonormalize',
    'subspace_distance',
]
