import numpy as np
import pytest

from src.catalog import builtin, cat_orbit, wrap
from src.closing import (MS_ORIENTATION, ceh_check, close_orbit, closing_epsilon,
                         stable_shortfall, stable_shortfall_bruteforce)
from src.errors import PreconditionViolated

PERIOD_FIVE = np.array([8.0 / 11.0, 5.0 / 11.0])


def diagonal_segment(length=5, **kwargs):
    seq, split = builtin('diag_linear', {'length': length})
    report = ceh_check(seq, split, 0.5, -0.5, kwargs.pop('theta_bar', 0.1), 1.0, **kwargs)
    return seq, split, report


@pytest.fixture(scope='module')
def cat_segment():
    chart = cat_orbit(PERIOD_FIVE + 1e-4 * np.array([0.6, 0.8]), 5)
    report = ceh_check(chart.seq, chart.split, 0.5, -0.5, 0.1, chart.L, 5,
                       offset=chart.return_offset(5), frame_change=chart.frame_change(5))
    return chart, report


class TestStableShortfall:

    def test_matches_bruteforce(self, rng):
        nu = rng.normal(-0.3, 1.0, 200)
        assert np.allclose(stable_shortfall(nu, -0.5), stable_shortfall_bruteforce(nu, -0.5))

    def test_last_entry_is_zero(self):
        assert stable_shortfall([1.0, 1.0], -0.5).tolist() == [3.0, 1.5, 0.0]


class TestCertificate:

    def test_uniform_segment_is_zero_feasible(self):
        _, _, report = diagonal_segment(chi_bar_u=0.3)
        assert (report.M_u, report.M_s, report.M_hat_u, report.M_hat_s) == (0.0, 0.0, 0.0, 0.0)
        assert report.verdict
        assert report.p0 == 0
        assert np.allclose(report.lambda_u, np.log(2.0))

    def test_theta_threshold_above_the_angle(self):
        _, _, report = diagonal_segment(theta_bar=2.0)
        assert not report.verdicts['theta_ends']
        assert not report.verdict
        assert all(report.indicator)

    def test_overridden_parameters(self):
        seq, split = builtin('diag_linear', {'length': 5})
        report = ceh_check(seq, split, 1.0, -0.5, 0.1, 1.0)
        assert report.M_u > 0.0
        forced = ceh_check(seq, split, 1.0, -0.5, 0.1, 1.0, params={'M_u': 0.0})
        assert not forced.verdicts['ceh_Mu']

    @pytest.mark.parametrize("chi_hat_u, chi_hat_s", [(0.5, 0.0), (0.5, 0.2), (-0.1, -0.5)])
    def test_rate_signs(self, chi_hat_u, chi_hat_s):
        seq, split = builtin('diag_linear', {'length': 5})
        with pytest.raises(PreconditionViolated):
            ceh_check(seq, split, chi_hat_u, chi_hat_s, 0.1, 1.0)

    def test_orientation_is_recorded(self):
        _, _, report = diagonal_segment()
        assert report.ms_orientation == MS_ORIENTATION
        assert MS_ORIENTATION in report.model_dump_json()

    def test_torus_segment(self, cat_segment):
        _, report = cat_segment
        assert report.verdict
        assert report.M_u == 0.0 and report.M_s == 0.0
        assert report.subspace_distances['u'] < 1e-10
        assert report.endpoint_distance == pytest.approx(
            np.linalg.norm((np.linalg.matrix_power(np.array([[2.0, 1.0], [1.0, 1.0]]), 5)
                            - np.eye(2)) @ (1e-4 * np.array([0.6, 0.8]))), rel=1e-6)


class TestClosing:

    def test_fixed_point_of_linear_segment(self):
        seq, split, report = diagonal_segment(length=3)
        result = close_orbit(seq, split, report)
        assert np.allclose(result.z, 0.0, atol=1e-14)
        assert result.residual <= 1e-14
        assert result.hyperbolic
        assert result.eigen_moduli == pytest.approx([8.0, 0.125])

    def test_failed_certificate_is_refused(self):
        seq, split, report = diagonal_segment(theta_bar=2.0)
        with pytest.raises(PreconditionViolated):
            close_orbit(seq, split, report)

    def test_epsilon_halves_to_fit(self):
        _, _, report = diagonal_segment()
        assert closing_epsilon(report, 0.05) == 0.01
        assert closing_epsilon(report, 0.01) == 0.005

    def test_period_five_point_of_the_cat_map(self, cat_segment):
        chart, report = cat_segment
        result = close_orbit(chart.seq, chart.split, report, chart)
        assert np.linalg.norm(wrap(np.asarray(result.z) - PERIOD_FIVE)) < 1e-8
        assert result.residual <= 1e-8
        assert result.hyperbolic
        assert result.period == 5
        golden = (1.0 + np.sqrt(5.0)) / 2.0
        assert result.eigen_moduli[0] == pytest.approx(golden ** 10, rel=1e-9)
