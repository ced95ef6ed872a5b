import numpy as np
import pytest

from src.catalog.builtins import builtin, pliss_rate
from src.diagnostics import (effective_report, effective_series, eht_detect, eht_detect_bruteforce,
                             hyperbolic_times, lyapunov_exponents, m_sequence,
                             m_sequence_bruteforce, m_upper_bound, pliss, pliss_bruteforce,
                             series_frame, verify_via_beta_density)
from src.errors import PreconditionViolated
from src.germs import LinearData, extract_linear_data

LOG2 = np.log(2.0)


def linear_data(name, params=None, **kwargs):
    seq, split = builtin(name, params, **kwargs)
    return seq, extract_linear_data(seq, split)


class TestEffectiveSeries:

    def test_diagonal_system_is_effectively_hyperbolic(self):
        _, lin = linear_data('diag_linear', {'mu': 2.0, 'lam': 0.5, 'length': 50})
        series = effective_series(lin, 1.0, 1.0)
        assert np.allclose(series.delta, 0.0)
        assert np.allclose(series.lambda_e, LOG2)
        report = effective_report(lin, series)
        assert report.chi_e == pytest.approx(LOG2, abs=1e-12)
        assert report.effectively_hyperbolic
        assert report.chi_hat == pytest.approx(0.5 * LOG2)
        assert report.gamma_count == 50

    def test_alternating_system_is_not(self):
        _, lin = linear_data('alt_3_half', {'length': 1000})
        assert np.allclose(lin.lambda_u, -LOG2)
        assert np.all(np.isneginf(lin.lambda_s))
        series = effective_series(lin, 1.0, 1.0)
        assert np.all(series.delta == 0.0)
        report = effective_report(lin, series)
        assert report.chi_e <= -LOG2 + 1e-12
        assert not report.effectively_hyperbolic
        assert report.chi_hat_fallback

    def test_alternating_system_has_positive_lyapunov_exponents(self):
        seq, _ = builtin('alt_3_half', {'length': 10 ** 4})
        exponents = lyapunov_exponents(seq)
        expected = 0.5 * (np.log(3.0) - LOG2)
        assert np.allclose(exponents, expected, atol=1e-12)

    def test_threshold_branch_uses_beta_decay(self):
        lin = LinearData.from_rates([0.5, 0.5], beta=[10.0, 100.0])
        series = effective_series(lin, 1.0, beta_bar=10.0)
        assert series.lambda_e[1] == pytest.approx(-np.log(10.0))
        assert series.lambda_e[0] == 0.5
        assert not series.missing_predecessor

    def test_threshold_branch_keeps_smaller_rate(self):
        lin = LinearData.from_rates([1.0, 1.0, 1.0], beta=[1.0, 4.0, 2.0])
        series = effective_series(lin, 1.0, beta_bar=1.5)
        assert series.lambda_e[1] == pytest.approx(-np.log(4.0))
        assert series.lambda_e[2] == pytest.approx(np.log(2.0))

    def test_missing_predecessor_is_flagged(self):
        lin = LinearData.from_rates([1.0, 1.0], beta=[3.0, 3.0])
        series = effective_series(lin, 1.0, beta_bar=2.0)
        assert series.missing_predecessor
        assert series.lambda_e[0] == 1.0

    def test_domination_defect(self):
        lin = LinearData.from_rates([LOG2, LOG2], lambda_s=[np.log(3.0), -LOG2])
        series = effective_series(lin, 1.0, 10.0)
        assert np.allclose(series.delta, [np.log(1.5), 0.0])
        assert np.allclose(series.lambda_e, [np.log(4.0 / 3.0), LOG2])

    def test_defect_scales_with_alpha(self):
        lin = LinearData.from_rates([0.2, 0.5], lambda_s=[0.4, -1.0])
        series = effective_series(lin, 0.5, 10.0)
        assert np.allclose(series.delta, [0.4, 0.0])
        assert np.allclose(series.lambda_e, [-0.2, 0.5])


class TestHyperbolicTimes:

    @pytest.mark.parametrize("rates, chi_hat, expected", [
        ([1.0, 1.0, -1.0, 1.0, 1.0, 1.0], 0.2, [1, 2, 5, 6]),
        ([0.7] * 5, 0.2, [1, 2, 3, 4, 5]),
        ([-1.0, 1.0], 0.2, []),
    ])
    def test_examples(self, rates, chi_hat, expected):
        assert eht_detect(rates, chi_hat).tolist() == expected

    def test_chi_hat_must_be_positive(self):
        with pytest.raises(PreconditionViolated):
            eht_detect([1.0], 0.0)

    @pytest.mark.parametrize("chi_hat", [0.1, 0.4, 0.9])
    def test_matches_bruteforce(self, rng, chi_hat):
        rates = rng.normal(0.5, 1.0, 300)
        assert np.array_equal(eht_detect(rates, chi_hat), eht_detect_bruteforce(rates, chi_hat))

    def test_zero_shortfall_exactly_at_hyperbolic_times(self, rng):
        rates = rng.normal(0.3, 1.0, 500)
        gamma = eht_detect(rates, 0.2)
        m_seq = m_sequence(rates, 0.2)
        zeros = np.nonzero(m_seq[1:] == 0.0)[0] + 1
        assert np.array_equal(zeros, gamma)

    def test_m_sequence_matches_bruteforce(self, rng):
        rates = rng.normal(0.3, 1.0, 200)
        assert np.array_equal(m_sequence(rates, 0.25), m_sequence_bruteforce(rates, 0.25))

    def test_m_sequence_examples(self):
        m_seq = m_sequence([1.0, -1.0], 0.2)
        assert m_seq[0] == 0.0 and m_seq[1] == 0.0
        assert m_seq[2] == pytest.approx(1.2)
        assert m_sequence([-1.0, -1.0], 1.0).tolist() == [0.0, 2.0, 4.0]

    def test_upper_bound_single_exceedance(self):
        lin = LinearData.from_rates([1.0, 1.0], beta=[2.0, 2.0])
        series = effective_series(lin, 1.0, beta_bar=1.5, L=1.0)
        bound = m_upper_bound(lin, series, 0.5)
        assert bound[1] == pytest.approx(3.5)
        assert np.all(bound >= m_sequence(series, 0.5))

    def test_upper_bound_on_random_sequences(self, rng):
        for _ in range(100):
            beta = np.exp(np.abs(rng.normal(0.0, 1.0, 200)))
            lin = LinearData.from_rates(rng.normal(0.5, 1.0, 200), beta=beta)
            series = effective_series(lin, 1.0, beta_bar=1.5)
            assert np.all(m_upper_bound(lin, series, 0.3) >= m_sequence(series, 0.3) - 1e-12)

    def test_hyperbolic_times_contain_effective_ones(self):
        lin = LinearData.from_rates([1.0, -1.0, 1.0, 1.0], beta=[1.0, 5.0, 1.0, 1.0])
        series = effective_series(lin, 1.0, beta_bar=2.0)
        assert set(eht_detect(series, 0.5)) <= set(hyperbolic_times(lin, 0.5))

    def test_upper_bound_dominates(self):
        _, lin = linear_data('uniform_setting', {'length': 20})
        series = effective_series(lin, 1.0, 1.0)
        assert np.all(m_upper_bound(lin, series, 0.3) >= m_sequence(series, 0.3))

    def test_series_frame_columns(self):
        _, lin = linear_data('diag_linear', {'length': 8})
        frame = series_frame(effective_series(lin, 1.0, 1.0), 0.3)
        assert list(frame.columns) == ['n', 'delta', 'lambda_e', 'beta_flag', 'time', 'M_n',
                                       'in_gamma']
        assert frame['in_gamma'].sum() == 8
        assert frame['time'].tolist() == list(range(1, 9))

    def test_series_frame_rows_end_at_the_last_time(self):
        lin = LinearData.from_rates([1.0, -1.0, 3.0])
        frame = series_frame(effective_series(lin, 1.0, 1.0), 0.5)
        assert frame['in_gamma'].tolist() == [1, 0, 1]
        assert frame['M_n'].tolist() == pytest.approx([0.0, 1.5, 0.0])
        assert ((frame['M_n'] == 0.0).astype(int) == frame['in_gamma']).all()

    def test_random_sequences_agree_with_bruteforce(self, rng):
        for _ in range(200):
            rates = rng.normal(0.3, 1.0, int(rng.integers(1, 201)))
            chi_hat = float(rng.uniform(0.05, 1.0))
            gamma = eht_detect(rates, chi_hat)
            assert np.array_equal(gamma, eht_detect_bruteforce(rates, chi_hat))
            m_seq = m_sequence(rates, chi_hat)
            assert np.array_equal(np.nonzero(m_seq[1:] == 0.0)[0] + 1, gamma)

    def test_density_of_hyperbolic_times(self, rng):
        N, L, chi_hat = 10 ** 4, 2.0, 0.2
        for _ in range(100):
            lambda_u = np.minimum(rng.normal(0.5, 1.0, N), L)
            beta = np.where(rng.random(N) < 0.05, 3.0, 1.0)
            series = effective_series(LinearData.from_rates(lambda_u, beta=beta), 1.0,
                                      beta_bar=2.0, L=L)
            chi_e = float(series.lambda_e.mean())
            assert chi_e > chi_hat
            assert series.lambda_e.max() <= L
            density = len(eht_detect(series, chi_hat)) / N
            assert density >= (chi_e - chi_hat) / (L - chi_hat) - 0.02


class TestPlissBlocks:

    def test_rates(self):
        assert [pliss_rate(n) for n in range(8)] == [4.0, 4.0, 4.0, -3.0, 4.0, 4.0, -3.0, -3.0]

    def test_first_germ(self):
        seq, _ = builtin('pliss_blocks', {'length': 4}, n_min=1)
        assert seq[1].jacobian(np.zeros(1))[0, 0] == pytest.approx(np.exp(4.0))

    def test_average_and_shortfall_growth(self):
        seq, lin = linear_data('pliss_blocks', {'length': 2 ** 12})
        assert lin.lambda_u.mean() == pytest.approx((2 ** 11 + 7) / 2 ** 12)
        m_seq = m_sequence(lin.lambda_u, 0.4)
        for k in range(2, 13):
            assert m_seq[2 ** k] >= 3.4 * 2 ** (k - 2) - 1e-9, f"M at 2^{k}"

    def test_full_window_average(self):
        rates = np.array([pliss_rate(n) for n in range(2 ** 14)])
        assert rates.mean() == pytest.approx((2 ** 13 + 7) / 2 ** 14)


class TestPliss:

    def test_constant_sequence_saturates_bound(self):
        result = pliss([1.0] * 4, L=1.0, chi=1.0, chi_hat=0.5)
        assert result.times.tolist() == [1, 2, 3, 4]
        assert result.guaranteed == pytest.approx(4.0)

    def test_example_sequence(self):
        result = pliss([1.0, 1.0, -1.0, 1.0, 1.0, 1.0], L=1.0, chi=2.0 / 3.0, chi_hat=0.2)
        assert result.times.tolist() == [1, 2, 5, 6]
        assert result.guaranteed == pytest.approx(3.5)

    def test_matches_bruteforce_and_density(self, rng):
        y = rng.exponential(1.0, 400)
        lambdas = 1.0 - 0.4 * y / y.mean()
        result = pliss(lambdas, L=1.0, chi=float(lambdas.mean()), chi_hat=0.2)
        assert np.array_equal(result.times, pliss_bruteforce(lambdas, 0.2))
        assert result.rho == pytest.approx((lambdas.mean() - 0.2) / 0.8)
        assert result.count >= result.guaranteed - 1e-9

    def test_random_sequences_reach_the_guaranteed_count(self, rng):
        N, chi, chi_hat = 200, 0.6, 0.2
        for _ in range(100):
            y = rng.exponential(1.0, N)
            lambdas = 1.0 - 0.4 * y / y.mean()
            result = pliss(lambdas, L=1.0, chi=chi, chi_hat=chi_hat)
            assert result.rho == pytest.approx(0.5)
            assert np.array_equal(result.times, pliss_bruteforce(lambdas, chi_hat))
            assert result.count >= 0.5 * N

    def test_rejects_low_average(self):
        with pytest.raises(PreconditionViolated):
            pliss([0.1, 0.1], L=1.0, chi=0.5, chi_hat=0.2)

    def test_rejects_values_above_cap(self):
        with pytest.raises(PreconditionViolated):
            pliss([2.0, 0.5], L=1.0, chi=0.5, chi_hat=0.2)


class TestBetaDensity:

    def test_constant_beta(self):
        _, lin = linear_data('diag_linear', {'length': 20})
        report = verify_via_beta_density(lin, 1.0)
        assert report.best_beta_bar == 1.0
        assert report.chi_u == pytest.approx(LOG2)
        assert report.effectively_hyperbolic

    def test_density_bound_against_effective_average(self, rng):
        beta = np.exp(np.cumsum(rng.normal(0.0, 0.3, 200)))
        beta = beta / beta.min()
        lin = LinearData.from_rates(np.full(200, 0.8), beta=beta)
        L = lin.global_L()
        report = verify_via_beta_density(lin, 1.0, L=L)
        for b, bound in zip(report.candidates, report.implied_bounds):
            series = effective_series(lin, 1.0, b, L=L)
            assert series.lambda_e.mean() >= bound - 1e-9
