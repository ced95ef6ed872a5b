import numpy as np
import pytest
from pydantic import ValidationError

from src.catalog.builtins import builtin
from src.diagnostics import effective_series, m_sequence
from src.errors import PreconditionViolated, RateOverflow, SeedTooLarge
from src.germs import LinearData, extract_linear_data
from src.rates import (ParamSeq, RateSettings, SeedSettings, build_params_theorem_d,
                       check_hp1_conditions, check_theorem_c, derived_rates, hat_r,
                       search_xi_gamma, suggest_seeds)
from src.rates.parameters import _clamped_recursion

LOG2 = np.log(2.0)

RATES = RateSettings(chi_hat_u=0.5, chi_bar_u=0.3, chi_hat_s=-0.5, chi_bar_s=-0.3)


def diagonal_data(count=5):
    return LinearData.from_rates(np.full(count, LOG2), np.full(count, -LOG2))


def equality_params(count=5):
    n = np.arange(count + 1)
    return ParamSeq.from_values(0, 0.1 * 2.0 ** n, 0.01 * 2.0 ** -n, 0.01 * 4.0 ** -n, 8.0 ** -n)


def system_window(name, beta_bar, length=10):
    seq, split = builtin(name, {'length': length})
    lin = extract_linear_data(seq, split)
    return seq, split, lin, effective_series(lin, 1.0, beta_bar)


class TestRateSettings:

    def test_default_delta(self):
        assert RATES.default_delta() == pytest.approx(0.2)

    @pytest.mark.parametrize("values", [
        {'chi_hat_u': 0.3, 'chi_bar_u': 0.5},
        {'chi_hat_u': 0.5, 'chi_bar_u': 0.3, 'chi_hat_s': -0.1, 'chi_bar_s': -0.3},
        {'chi_hat_u': 0.5, 'chi_bar_u': 0.3, 'chi_hat_s': -0.5},
    ])
    def test_ordering_is_enforced(self, values):
        with pytest.raises(ValidationError):
            RateSettings(**values)


class TestDerivedRates:

    def test_linear_germs(self):
        lin = diagonal_data(3)
        params = ParamSeq.from_values(0, np.full(4, 0.1), np.zeros(4), np.zeros(4), np.ones(4),
                                      gamma=np.full(4, 0.05))
        rates = derived_rates(lin, params, nonlinear=False)
        assert np.allclose(rates.lambda_hat_u, LOG2)
        assert np.allclose(rates.lambda_check_s, -LOG2)
        assert np.allclose(rates.chi, LOG2 - np.log(1.05))
        assert np.all(rates.eps_sigma == 0.0)

    def test_hand_evaluation(self):
        lin = LinearData.from_rates([LOG2], [-LOG2], beta=[2.0])
        params = ParamSeq.from_values(0, [0.1, 0.1], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0],
                                      gamma=[0.05, 0.05])
        rates = derived_rates(lin, params)
        assert rates.eps_f[0] == pytest.approx(0.21)
        assert np.exp(rates.lambda_hat_u[0]) == pytest.approx(1.7795)
        assert rates.eps_sigma[0] == 0.0
        assert rates.chi[0] <= rates.lambda_hat_u[0]
        assert rates.lambda_check_s[0] >= -LOG2
        assert rates.lambda_hat_s[0] >= -LOG2

    def test_overflow(self):
        lin = LinearData.from_rates([LOG2], [-LOG2], beta=[100.0])
        params = ParamSeq.from_values(0, [0.1, 0.1], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0])
        with pytest.raises(RateOverflow) as exc:
            derived_rates(lin, params)
        assert exc.value.at == 0

    def test_monotone_in_beta(self):
        params = ParamSeq.from_values(0, [0.01, 0.01], [0.001, 0.001], [0.01, 0.01], [1.0, 1.0])
        previous = None
        for beta in [1.0, 2.0, 4.0, 8.0]:
            lin = LinearData.from_rates([LOG2], [-LOG2], beta=[beta])
            rates = derived_rates(lin, params)
            if previous is not None:
                assert rates.lambda_hat_u[0] <= previous.lambda_hat_u[0]
                assert rates.lambda_check_s[0] >= previous.lambda_check_s[0]
            previous = rates


class TestTheoremC:

    def test_recursions_at_equality(self):
        report = check_theorem_c(diagonal_data(), equality_params())
        assert report.ok, report.failed()

    def test_radius_bump_fails_first_step(self):
        params = equality_params()
        r = params.r.copy()
        r[1] *= 1.01
        report = check_theorem_c(diagonal_data(), ParamSeq.from_values(
            0, r, params.tau, params.sigma, params.kappa))
        assert report.first_failure['rec_r'] == 0
        assert report.first_failure['rec_t'] is None

    def test_tau_above_radius(self):
        params = equality_params()
        tau = params.tau.copy()
        tau[3] = 10.0
        report = check_theorem_c(diagonal_data(), ParamSeq.from_values(
            0, params.r, tau, params.sigma, params.kappa))
        assert not report.flags['bd_t'][3]

    def test_kappa_tau_above_sigma(self):
        params = equality_params()
        report = check_theorem_c(diagonal_data(), ParamSeq.from_values(
            0, params.r, params.tau, params.sigma * 1e-3, params.kappa))
        assert 'bd_k' in report.failed()

    def test_needs_one_more_entry(self):
        params = ParamSeq.from_values(0, np.ones(5), np.zeros(5), np.zeros(5), np.ones(5))
        with pytest.raises(PreconditionViolated):
            check_theorem_c(diagonal_data(5), params)


class TestConstruction:

    def test_clamped_recursion(self):
        c = _clamped_recursion(np.array([1.0, -1.0, 1.0]), 0.1, 1.0)
        assert np.allclose(c, [1.0, 1.0, np.exp(-1.1), np.exp(-0.2)])

    def test_c_dominates_shortfall(self, rng):
        for _ in range(100):
            rates = rng.normal(0.3, 1.0, 60)
            c = _clamped_recursion(rates, 0.1, 1.0)
            assert np.all(c >= np.exp(-m_sequence(rates, 0.1)) * (1 - 1e-12))

    def test_search(self):
        _, _, lin, _ = system_window('diag_linear', 1.0)
        xi, gamma_bar = search_xi_gamma(lin, 1.0, 0.1)
        assert gamma_bar == pytest.approx(0.025)
        assert xi == pytest.approx(0.1 / 128)

    @pytest.mark.parametrize("name, beta_bar", [('diag_linear', 1.0), ('quad_hyperbolic', 3.0)])
    def test_build_on_catalog_systems(self, name, beta_bar):
        seq, _, lin, series = system_window(name, beta_bar)
        xi, gamma_bar = search_xi_gamma(lin, 1.0, 0.1)
        seeds = suggest_seeds(lin, series, 1.0, xi, gamma_bar, beta_bar)
        assert seeds.r_bar == pytest.approx(xi * gamma_bar / (8 * beta_bar))
        params = build_params_theorem_d(lin, series, 1.0, RATES, seeds)
        assert len(params) == len(lin) + 1
        assert np.allclose(params.c, 1.0)
        assert np.allclose(params.r, seeds.r_bar)
        assert check_theorem_c(lin, params).ok
        assert all(np.all(params.flags[key]) for key in ('rec_r', 'rec_k', 'bd_s'))
        assert np.all(params.flags['c_dominates_m'])

        rates = derived_rates(lin, params, nonlinear=not seq[0].linear)
        assert np.all(rates.lambda_check_s >= lin.lambda_s)
        assert check_hp1_conditions(lin, params, rates).flags.keys() >= {'hp_rn', 'hp_kn'}

    def test_seed_inequalities(self):
        _, _, lin, series = system_window('diag_linear', 1.0)
        seeds = SeedSettings(r_bar=1e-6, tau_bar=1e-3, kappa_bar=1.0, kappa_hat=1.0,
                             gamma_bar=0.025, xi=0.1 / 128, beta_bar=1.0)
        with pytest.raises(SeedTooLarge, match='tau_bar'):
            build_params_theorem_d(lin, series, 1.0, RATES, seeds)

    def test_large_radius_is_rejected(self):
        _, _, lin, series = system_window('diag_linear', 1.0)
        seeds = SeedSettings(r_bar=1.0, kappa_bar=1.0, kappa_hat=1.0, gamma_bar=0.025,
                             xi=0.1 / 128, beta_bar=1.0)
        with pytest.raises(SeedTooLarge):
            build_params_theorem_d(lin, series, 1.0, RATES, seeds)

    def test_beta_zero_above_threshold(self):
        lin = LinearData.from_rates(np.full(3, LOG2), np.full(3, -LOG2), beta=[5.0, 1.0, 1.0])
        series = effective_series(lin, 1.0, 10.0)
        seeds = SeedSettings(r_bar=1e-6, kappa_bar=1.0, gamma_bar=0.025, xi=0.1 / 128,
                             beta_bar=2.0)
        with pytest.raises(PreconditionViolated):
            build_params_theorem_d(lin, series, 1.0, RATES, seeds)


class TestHatR:

    def test_start_index(self):
        params = equality_params()
        assert hat_r(diagonal_data(), params, 0) == pytest.approx(0.1)

    def test_without_tau(self):
        lin = diagonal_data()
        params = ParamSeq.from_values(0, np.full(6, 0.1), np.zeros(6), np.zeros(6), np.ones(6),
                                      delta=0.1)
        assert hat_r(lin, params, 3) == pytest.approx(np.exp(3 * (0.1 - LOG2)) * 0.1)

    def test_two_term_evaluation(self):
        lin = diagonal_data()
        tau = 0.01 * 2.0 ** -np.arange(6)
        params = ParamSeq.from_values(0, np.full(6, 0.1), tau, np.zeros(6), np.ones(6),
                                      delta=0.1, xi=0.05)
        expected = (np.exp(2 * (0.1 - LOG2)) * 0.1
                    + 3 * 0.05 * (tau[0] + np.exp(0.1 - LOG2) * tau[1]))
        assert hat_r(lin, params, 2) == pytest.approx(expected)
