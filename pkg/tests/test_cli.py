import json

import numpy as np
import pandas as pd
import pytest

import app
from src.catalog import wrap

LOG2 = np.log(2.0)


def write_config(tmp_path, name='run.json', **settings):
    settings.setdefault('out', str(tmp_path / 'out'))
    path = tmp_path / name
    path.write_text(json.dumps(settings))
    return path


def run(*args):
    return app.main([str(a) for a in args])


def read_json(path):
    return json.loads(path.read_text())


DIAGONAL = {'name': 'diag_linear', 'params': {'length': 50}}


class TestAnalyze:

    def test_diagonal_system(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL, chi_hat=0.3,
                           thresholds={'beta_bar': 1.0})
        assert run('analyze', '--config', cfg) == 0
        out = tmp_path / 'out'
        for name in ('run.json', 'linear_data.csv', 'effective_series.csv',
                     'effective_report.json', 'lyapunov.csv'):
            assert (out / name).exists(), name
        report = read_json(out / 'effective_report.json')
        assert report['chi_e'] == pytest.approx(LOG2, abs=1e-12)
        assert report['effectively_hyperbolic']
        assert pd.read_csv(out / 'effective_series.csv')['in_gamma'].sum() == 50

    def test_threshold_from_density(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL, chi_hat=0.3)
        assert run('analyze', '--config', cfg) == 0
        assert (tmp_path / 'out' / 'beta_density.csv').exists()

    def test_alternating_system(self, tmp_path):
        cfg = write_config(tmp_path, system={'name': 'alt_3_half', 'params': {'length': 1000}},
                           thresholds={'beta_bar': 1.0})
        assert run('analyze', '--config', cfg) == 0
        report = read_json(tmp_path / 'out' / 'effective_report.json')
        assert not report['effectively_hyperbolic']
        exponents = pd.read_csv(tmp_path / 'out' / 'lyapunov.csv')['exponent']
        assert np.all(exponents > 0)

    def test_parameter_construction(self, tmp_path):
        xi, gamma_bar = 0.1 / 128, 0.025
        seeds = {'r_bar': xi * gamma_bar / 8, 'kappa_bar': 4 / xi, 'kappa_hat': 4 / xi,
                 'gamma_bar': gamma_bar, 'xi': xi, 'beta_bar': 1.0}
        rates = {'chi_hat_u': 0.5, 'chi_bar_u': 0.3, 'chi_hat_s': -0.5, 'chi_bar_s': -0.3}
        cfg = write_config(tmp_path, system={'name': 'diag_linear', 'params': {'length': 10}},
                           rates=rates, seeds=seeds, thresholds={'beta_bar': 1.0})
        assert run('analyze', '--config', cfg) == 0
        params = pd.read_csv(tmp_path / 'out' / 'params.csv')
        assert len(params) == 11
        assert np.all(params['flags'] == 0)
        assert (tmp_path / 'out' / 'derived_rates.csv').exists()

    def test_runs_are_reproducible(self, tmp_path):
        outputs = []
        for i in range(2):
            cfg = write_config(tmp_path, name=f'run{i}.json', out=str(tmp_path / f'out{i}'),
                               system={'name': 'quad_hyperbolic', 'params': {'length': 20}},
                               chi_hat=0.3)
            assert run('analyze', '--config', cfg, '--seed', 7) == 0
            out = tmp_path / f'out{i}'
            outputs.append([(out / name).read_bytes() for name in
                            ('effective_report.json', 'effective_series.csv', 'linear_data.csv')])
        assert outputs[0] == outputs[1]

    def test_seed_is_recorded(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL, thresholds={'beta_bar': 1.0})
        assert run('analyze', '--config', cfg, '--seed', 11, '--tol', 'rate=1e-10') == 0
        record = read_json(tmp_path / 'out' / 'run.json')
        assert record['seed'] == 11
        assert record['tolerances'] == {'rate': 1e-10}


class TestErrors:

    def test_unknown_builtin(self, tmp_path):
        cfg = write_config(tmp_path, system={'name': 'henon'})
        assert run('analyze', '--config', cfg) == 1

    def test_bad_rate_ordering(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL,
                           rates={'chi_hat_u': 0.1, 'chi_bar_u': 0.3})
        assert run('analyze', '--config', cfg) == 1

    def test_unknown_tolerance(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL)
        assert run('analyze', '--config', cfg, '--tol', 'nonsense=1') == 1

    def test_missing_config(self):
        assert run('analyze') == 1

    def test_eht_needs_a_rate(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL, thresholds={'beta_bar': 1.0})
        assert run('eht', '--config', cfg) == 1


class TestCommands:

    def test_eht_from_system(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL, chi_hat=0.3, thresholds={'beta_bar': 1.0})
        assert run('eht', '--config', cfg) == 0
        table = pd.read_csv(tmp_path / 'out' / 'eht.csv')
        assert len(table) == 50
        assert table['in_gamma'].sum() == 50

    def test_eht_from_csv(self, tmp_path):
        series = tmp_path / 'rates.csv'
        pd.DataFrame({'n': range(6), 'lambda_e': [1.0, 1.0, -1.0, 1.0, 1.0, 1.0]}).to_csv(
            series, index=False)
        cfg = write_config(tmp_path, system=DIAGONAL, chi_hat=0.2, series_path=str(series))
        assert run('eht', '--config', cfg) == 0
        table = pd.read_csv(tmp_path / 'out' / 'eht.csv')
        assert table['in_gamma'].tolist() == [1, 1, 0, 0, 1, 1]
        assert table['time'].tolist() == [1, 2, 3, 4, 5, 6]
        assert (table['M_n'] == 0.0).astype(int).tolist() == table['in_gamma'].tolist()

    def test_grow(self, tmp_path):
        cfg = write_config(tmp_path, system={'name': 'quad_hyperbolic', 'params': {'length': 10}},
                           grow={'steps': 3, 'radius': 0.05, 'kappa': 4.0})
        assert run('grow', '--config', cfg) == 0
        out = tmp_path / 'out'
        assert sorted(p.stem for p in (out / 'manifolds').glob('*.json')) == [
            'psi_0', 'psi_1', 'psi_2', 'psi_3']
        assert len(pd.read_csv(out / 'transform_steps.csv')) == 3

    def test_unstable(self, tmp_path):
        cfg = write_config(tmp_path, system={'name': 'quad_hyperbolic'},
                           unstable={'radius': 0.1, 'window': 64, 'family_length': 2})
        assert run('unstable', '--config', cfg) == 0
        out = tmp_path / 'out'
        assert read_json(out / 'unstable_report.json')['converged']
        assert (out / 'manifolds' / 'unstable_0.json').exists()

    def test_close_on_the_torus(self, tmp_path):
        point = [8 / 11 + 6e-5, 5 / 11 + 8e-5]
        cfg = write_config(tmp_path, system={'name': 'cat_germ', 'params': {'point': point}},
                           segment={'p': 5, 'chi_hat_u': 0.5, 'chi_hat_s': -0.5})
        assert run('close', '--config', cfg) == 0
        out = tmp_path / 'out'
        assert read_json(out / 'segment_report.json')['verdicts']['theta_ends']
        result = read_json(out / 'periodic_point.json')
        assert np.linalg.norm(wrap(np.asarray(result['z']) - [8 / 11, 5 / 11])) < 1e-8
        assert result['hyperbolic']

    def test_report(self, tmp_path):
        cfg = write_config(tmp_path, system=DIAGONAL, chi_hat=0.3, thresholds={'beta_bar': 1.0})
        assert run('analyze', '--config', cfg) == 0
        assert run('report', '--config', cfg) == 0
        html = (tmp_path / 'out' / 'report.html').read_text()
        assert 'figure-0' in html

    def test_report_without_outputs(self, tmp_path):
        assert run('report', '--out', tmp_path / 'empty') == 1
