import numpy as np
import pytest

from src.catalog import SAMPLE_DESCRIPTORS, builtin
from src.errors import NoConvergence, PreconditionViolated
from src.germs import Germ, GermSequence, Splitting, extract_linear_data
from src.manifolds import (backward_orbit, check_backward_contraction, check_characterization,
                           unstable_solve)

SLOPE = 2.0 / 7.0


def vertical_rate_system(rate, n_min=-128):
    """(x, y) -> (2x, rate y + x^2) on [n_min, -1] with the coordinate splitting"""
    def func(z):
        x, y = z
        return np.array([2.0 * x, rate * y + x * x])

    def jac(z):
        x, _ = z
        return np.array([[2.0, 0.0], [2.0 * x, rate]])

    germ = Germ(2, func, jac, -0.5, 0.5)
    return GermSequence(lambda n: germ, n_min, -1), Splitting.coordinate(2, 1, n_min, 0)


@pytest.fixture(scope='module')
def quadratic_family():
    seq, split = builtin('quad_hyperbolic', {}, n_min=-128, n_max=-1)
    family, report = unstable_solve(seq, split, 0.1, k_max=128)
    return seq, split, family, report


class TestUnstableSolve:

    def test_quadratic_coefficient(self, quadratic_family):
        _, _, family, report = quadratic_family
        assert report.converged
        assert family[0].second_derivative(0.0)[0] / 2 == pytest.approx(SLOPE, abs=1e-6)
        assert report.c0_residual <= 1e-9
        assert sorted(family) == list(range(-7, 1))
        assert report.cauchy_certified
        assert report.cauchy_bound < 1e-9

    def test_graph_is_invariant(self, quadratic_family):
        seq, _, family, _ = quadratic_family
        v = 0.03
        point = np.array([v, family[-1].evaluate(v)[0]])
        image = seq[-1](point)
        assert image[1] == pytest.approx(family[0].evaluate(image[0])[0], abs=1e-10)

    def test_polynomial_descriptor_agrees(self):
        descriptor = SAMPLE_DESCRIPTORS[-1].model_copy(update={'n_min': -128, 'n_max': -1})
        seq, split = descriptor.instantiate()
        family, _ = unstable_solve(seq, split, 0.1, k_max=128)
        assert family[0].second_derivative(0.0)[0] / 2 == pytest.approx(SLOPE, abs=1e-6)

    def test_cauchy_bound_with_linear_data(self):
        seq, split = builtin('diag_linear', {}, n_min=-64, n_max=-1)
        lin = extract_linear_data(seq, split)
        family, report = unstable_solve(seq, split, 0.1, lin=lin, k_max=64)
        assert np.allclose(family[0].values, 0.0)
        assert report.cauchy_bound is not None

    def test_window_limit(self):
        seq, split = builtin('quad_hyperbolic', {}, n_min=-128, n_max=-1)
        with pytest.raises(NoConvergence):
            unstable_solve(seq, split, 0.1, k_max=2)

    def test_missing_domination_is_rejected(self):
        seq, split = vertical_rate_system(3.0, n_min=-64)
        with pytest.raises(PreconditionViolated, match="domination"):
            unstable_solve(seq, split, 0.1, k_max=1024)

    def test_missing_domination_in_linear_data(self):
        seq, split = vertical_rate_system(3.0, n_min=-16)
        lin = extract_linear_data(seq, split)
        with pytest.raises(PreconditionViolated, match="domination"):
            unstable_solve(seq, split, 0.1, lin=lin)

    def test_weak_domination_needs_a_long_window(self):
        seq, split = vertical_rate_system(1.9)
        with pytest.raises(NoConvergence):
            unstable_solve(seq, split, 0.1, tol=1e-3, k_max=64)
        family, report = unstable_solve(seq, split, 0.1, tol=1e-3, k_max=128)
        assert report.window == 128
        assert report.cauchy_certified
        assert family[0].second_derivative(0.0)[0] / 2 == pytest.approx(1.0 / 2.1, abs=1e-6)

    def test_needs_negative_indices(self):
        seq, split = builtin('quad_hyperbolic', {'length': 4})
        with pytest.raises(PreconditionViolated):
            unstable_solve(seq, split, 0.1)


class TestCharacterisation:

    def test_backward_orbit_halves(self):
        seq, _ = builtin('diag_linear', {}, n_min=-4, n_max=-1)
        orbit = backward_orbit(seq, [0.4, 0.0], 3)
        assert np.allclose(orbit[:, 0], [0.4, 0.2, 0.1, 0.05])

    def test_point_on_the_graph(self, quadratic_family):
        seq, split, family, _ = quadratic_family
        x = np.array([0.05, family[0].evaluate(0.05)[0]])
        report = check_characterization(seq, split, family[0], x, 2 * np.linalg.norm(x), 0.5)
        assert report.verdict == 'member'
        assert report.backward_member

    def test_point_off_the_graph(self, quadratic_family):
        seq, split, family, _ = quadratic_family
        x = np.array([0.05, family[0].evaluate(0.05)[0] + 0.01])
        report = check_characterization(seq, split, family[0], x, 2 * np.linalg.norm(x), 0.5)
        assert report.verdict == 'non-member'
        assert report.vertical_distance == pytest.approx(0.01, abs=1e-12)

    def test_backward_contraction(self, quadratic_family):
        seq, split, family, _ = quadratic_family
        report = check_backward_contraction(seq, split, family[0], 0.5, M=0.1)
        assert report.holds
        assert report.ratios[-1] < 0.01
