import numpy as np
import pytest

import config
from src.catalog.builtins import CAT_MATRIX, builtin
from src.errors import DomainExit, NotAGerm, PreconditionViolated
from src.germs import (ConeField, Germ, GermSequence, LinearData, Splitting, compose,
                       compose_jacobian, cones_to_splitting, extract_linear_data,
                       holder_estimate, inverse_sequence, newton_solve, nonlinear_split,
                       orbit, subspace_distance)
from src.germs.germ import finite_difference_jacobian

LOG2 = np.log(2.0)


def cat_sequence(count):
    germ = Germ(2, lambda x: CAT_MATRIX @ x, lambda x: CAT_MATRIX, linear=True, label='cat')
    return GermSequence([germ] * count, 0)


def cat_eigenvectors():
    values, vectors = np.linalg.eigh(CAT_MATRIX)
    return vectors[:, [1]], vectors[:, [0]]


class TestNewton:

    def test_scalar_root(self):
        result = newton_solve(lambda x: x ** 2 - 2.0, lambda x: np.diag(2.0 * x), np.array([1.0]))
        assert result.converged
        assert result.x[0] == pytest.approx(np.sqrt(2.0), abs=1e-12)
        assert result.history[-1] <= 1e-12

    def test_singular_jacobian_is_reported(self):
        result = newton_solve(lambda x: x ** 2 + 1.0, lambda x: np.diag(2.0 * x), np.array([0.0]))
        assert not result.converged

    def test_damping_rescues_overshooting_steps(self):
        result = newton_solve(np.arctan, lambda x: np.diag(1.0 / (1.0 + x ** 2)), np.array([2.0]))
        assert result.converged
        assert abs(result.x[0]) <= 1e-12

    def test_damping_floor_is_configurable(self, monkeypatch):
        monkeypatch.setitem(config.NEWTON_SETTINGS, 'damping_floor', 1.0)
        result = newton_solve(np.arctan, lambda x: np.diag(1.0 / (1.0 + x ** 2)), np.array([2.0]))
        assert not result.converged
        assert result.x[0] == 2.0


class TestGerm:

    def test_fixed_map_is_used_as_is(self):
        germ = Germ.centered(2, lambda x: 2.0 * x)
        assert np.array_equal(germ(np.zeros(2)), np.zeros(2))

    def test_nearby_fixed_point_is_translated(self):
        germ = Germ.centered(1, lambda x: 2.0 * x + 1e-8, lambda x: np.array([[2.0]]))
        assert abs(germ(np.zeros(1))[0]) < 1e-15
        assert germ.jacobian(np.zeros(1))[0, 0] == 2.0

    def test_far_fixed_point_is_rejected(self):
        with pytest.raises(NotAGerm):
            Germ.centered(1, lambda x: 2.0 * x + 0.1)

    def test_domain_must_contain_origin(self):
        with pytest.raises(PreconditionViolated):
            Germ(1, lambda x: x, lower=0.0, upper=1.0)

    def test_finite_difference_jacobian(self):
        seq, _ = builtin('quad_hyperbolic', {'length': 1})
        x = np.array([0.1, -0.2])
        exact = seq[0].jacobian(x)
        assert np.allclose(finite_difference_jacobian(seq[0], x), exact, atol=1e-8)

    def test_inverse_undoes_forward(self):
        seq, _ = builtin('quad_hyperbolic', {'length': 1})
        germ = seq[0]
        x = np.array([0.05, -0.03])
        assert np.allclose(germ.inverse()(germ(x)), x, atol=1e-12)


class TestComposition:

    def test_identity_when_indices_coincide(self):
        seq, _ = builtin('diag_linear', {'length': 3})
        x = np.array([0.1, 0.2])
        assert np.array_equal(compose(seq, 1, 1, x), x)

    def test_alternating_two_step_product(self):
        seq, _ = builtin('alt_3_half', {'length': 2})
        assert np.allclose(compose_jacobian(seq, 0, 2, np.zeros(2)), 1.5 * np.eye(2))

    def test_orbit_rows(self):
        seq, _ = builtin('diag_linear', {'length': 3})
        rows = orbit(seq, 0, 3, [0.1, 0.8])
        assert np.allclose(rows[:, 0], [0.1, 0.2, 0.4, 0.8])
        assert np.allclose(rows[:, 1], [0.8, 0.4, 0.2, 0.1])

    def test_leaving_the_box_raises(self):
        seq, _ = builtin('diag_linear', {'length': 3})
        with pytest.raises(DomainExit) as exc:
            compose(seq, 0, 3, [0.6, 0.0])
        assert exc.value.at == 1

    def test_factory_needs_explicit_range(self):
        with pytest.raises(PreconditionViolated):
            GermSequence(lambda n: Germ(1, lambda x: 2.0 * x), 0)

    def test_out_of_range_index(self):
        seq, _ = builtin('diag_linear', {'length': 3})
        with pytest.raises(IndexError):
            seq[3]


class TestSplittings:

    def test_auto_eigen_is_invariant_for_the_cat_map(self):
        seq = cat_sequence(4)
        split = Splitting.auto_eigen(seq)
        assert split.is_invariant(seq)
        eu, es = cat_eigenvectors()
        assert subspace_distance(split.at(0)[0], eu) < 1e-12
        assert subspace_distance(split.at(4)[1], es) < 1e-12

    def test_coordinate_splitting_fails_for_the_cat_map(self):
        seq = cat_sequence(2)
        assert not Splitting.coordinate(2, 1, 0, 2).is_invariant(seq)

    def test_cones_are_invariant(self):
        seq = cat_sequence(30)
        cones = ConeField.constant(np.eye(2)[:, :1], np.eye(2)[:, 1:], 0.7, 0.7, 0, 30)
        assert cones.invariance_failure(seq) is None

    def test_narrow_cones_fail(self):
        seq = cat_sequence(3)
        cones = ConeField.constant(np.eye(2)[:, :1], np.eye(2)[:, 1:], 0.3, 0.3, 0, 3)
        assert cones.invariance_failure(seq) == 0

    def test_splitting_from_cones(self):
        seq = cat_sequence(30)
        cones = ConeField.constant(np.eye(2)[:, :1], np.eye(2)[:, 1:], 0.7, 0.7, 0, 30)
        split = cones_to_splitting(seq, cones)
        assert split.is_invariant(seq)
        eu, es = cat_eigenvectors()
        assert subspace_distance(split.at(15)[0], eu) < 1e-10
        assert subspace_distance(split.at(15)[1], es) < 1e-10

    def test_cone_openings_are_bounded(self):
        with pytest.raises(PreconditionViolated):
            ConeField.constant(np.eye(2)[:, :1], np.eye(2)[:, 1:], 2.0, 0.5, 0, 3)


class TestLinearData:

    def test_diagonal_rates(self):
        seq, split = builtin('diag_linear', {'mu': 2.0, 'lam': 0.5, 'length': 6})
        lin = extract_linear_data(seq, split)
        assert np.allclose(lin.lambda_u, LOG2)
        assert np.allclose(lin.lambda_s, -LOG2)
        assert np.allclose(lin.theta, np.pi / 2)
        assert np.allclose(lin.beta, 1.0)
        assert lin.global_L() == pytest.approx(LOG2)
        assert all(lin.check_c3(seq, split, samples=64).values())

    def test_c3_allowance_is_absolute(self):
        df = np.diag([np.exp(5.0), 0.5])
        seq = GermSequence([Germ(2, lambda x: df @ x, lambda x: df, linear=True)], 0)
        split = Splitting.coordinate(2, 1, 0, 1)
        exact = LinearData.from_rates([5.0], lambda_s=[np.log(0.5)])
        assert all(exact.check_c3(seq, split, samples=16).values())
        overstated = LinearData.from_rates([5.0 + 1e-11], lambda_s=[np.log(0.5)])
        flags = overstated.check_c3(seq, split, samples=16)
        assert not flags['expansion']
        assert flags['contraction'] and flags['angle']

    def test_non_invariant_splitting_is_rejected(self):
        seq = cat_sequence(2)
        with pytest.raises(PreconditionViolated, match="invariance"):
            extract_linear_data(seq, Splitting.coordinate(2, 1, 0, 2))

    def test_quadratic_holder_constant(self):
        seq, _ = builtin('quad_hyperbolic', {'length': 1})
        est = holder_estimate(seq[0], 1.0, 0.1)
        assert 1.9 <= est.lower <= 2.0 + 1e-9
        assert est.extrapolated >= est.lower

    def test_linear_germs_have_zero_holder_constant(self):
        seq, _ = builtin('diag_linear', {'length': 1})
        assert holder_estimate(seq[0], 1.0, 0.1).extrapolated == 0.0


class TestSplitCoordinates:

    def test_quadratic_error_terms(self):
        seq, split = builtin('quad_hyperbolic', {'length': 1})
        sm = nonlinear_split(seq[0], split, 0)
        assert np.allclose(sm.A, [[2.0]]) and np.allclose(sm.B, [[0.5]])
        assert sm.g(np.array([0.1]), np.array([0.2]))[0] == pytest.approx(0.04, abs=1e-15)
        assert sm.h(np.array([0.1]), np.array([0.2]))[0] == pytest.approx(0.01, abs=1e-15)
        assert sm.origin_error() == 0.0


class TestIndexReversal:

    def test_reversed_diagonal_sequence(self):
        seq, split = builtin('diag_linear', {'length': 5})
        rev = inverse_sequence(seq)
        assert (rev.n_min, rev.n_max) == (-5, -1)
        lin = extract_linear_data(rev, split.reversed())
        assert np.allclose(lin.lambda_u, LOG2)
        assert np.allclose(lin.lambda_s, -LOG2)

    def test_reversed_germ_inverts_forward_germ(self):
        seq, _ = builtin('quad_hyperbolic', {'length': 3})
        rev = inverse_sequence(seq)
        x = np.array([0.02, 0.01])
        assert np.allclose(rev[-2](seq[1](x)), x, atol=1e-12)
