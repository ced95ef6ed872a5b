from dotenv import load_dotenv
load_dotenv()

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

# Add src to path
sys.path.append(str(Path(__file__).parent))

import config
from src.analytics.visualizations import HyperbolicityVisualizations
from src.catalog.builtins import cat_orbit
from src.catalog.descriptor import SystemDescriptor
from src.closing.periodic import close_orbit
from src.closing.segment import ceh_check
from src.diagnostics.effective import (effective_report, effective_series,
                                       series_frame, shortfall_columns, verify_via_beta_density)
from src.diagnostics.lyapunov import lyapunov_exponents
from src.errors import HyperbolicityError, PreconditionViolated
from src.germs.linear_data import extract_linear_data
from src.manifolds.admissible import AdmissibleManifold
from src.manifolds.graph_transform import push
from src.manifolds.unstable import unstable_solve
from src.rates.derived_rates import derived_rates
from src.rates.parameters import ParamSeq, build_params_theorem_d, check_hp1_conditions
from src.runs.run_config import RunConfig
from src.runs.run_store import RunStore

logger = logging.getLogger('app')

COMMANDS = ('analyze', 'eht', 'grow', 'unstable', 'close', 'report')


def load_system(cfg: RunConfig, desc: SystemDescriptor):
    """Germ sequence and splitting, cut to the configured window"""
    seq, split = desc.instantiate()
    if cfg.window is not None and cfg.window < len(seq):
        seq = seq.restrict(seq.n_min, seq.n_min + cfg.window - 1)
    return seq, split


def analyze_system(cfg: RunConfig, seq, split):
    """Linear data, effective series and report for the loaded window"""
    lin = extract_linear_data(seq, split, seed=cfg.seed)
    alpha = seq.alpha
    density = None
    beta_bar = cfg.thresholds.beta_bar
    if beta_bar is None:
        density = verify_via_beta_density(lin, alpha, L=seq.L)
        beta_bar = density.best_beta_bar
    series = effective_series(lin, alpha, beta_bar, L=seq.L)
    chi_hat = cfg.chi_hat if cfg.chi_hat is not None else (
        cfg.rates.chi_hat_u if cfg.rates is not None else None)
    report = effective_report(lin, series, chi_hat, L=seq.L)
    return lin, series, report, density


def cmd_analyze(cfg: RunConfig, desc: SystemDescriptor, store: RunStore) -> int:
    seq, split = load_system(cfg, desc)
    lin, series, report, density = analyze_system(cfg, seq, split)

    store.save_linear_data(lin)
    store.save_series(series_frame(series, report.chi_hat))
    store.save_report('effective_report', report)
    if density is not None:
        store.save_table('beta_density', density.to_frame())
    exponents = lyapunov_exponents(seq)
    store.save_table('lyapunov', pd.DataFrame({'index': np.arange(len(exponents)),
                                               'exponent': exponents}))

    if cfg.rates is not None and cfg.seeds is not None:
        params = build_params_theorem_d(lin, series, seq.alpha, cfg.rates, cfg.seeds, L=seq.L)
        rates = derived_rates(lin, params, nonlinear=not all(seq[n].linear for n in seq.indices))
        params = params.with_flags(check_hp1_conditions(lin, params, rates).flags)
        store.save_params(params)
        store.save_table('derived_rates', rates.to_frame())

    logger.info("chi^e = %.6g, effectively hyperbolic: %s, |Gamma| = %d",
                report.chi_e, report.effectively_hyperbolic, report.gamma_count)
    return 0


def cmd_eht(cfg: RunConfig, desc: SystemDescriptor, store: RunStore) -> int:
    """Effective hyperbolic times and M_n from a rate CSV or from the system"""
    if cfg.series_path is not None:
        frame = pd.read_csv(cfg.series_path)
        column = 'lambda_e' if 'lambda_e' in frame.columns else frame.columns[-1]
        rates = frame[column].to_numpy(dtype=float)
        n = frame['n'].to_numpy() if 'n' in frame.columns else np.arange(len(rates))
    else:
        seq, split = load_system(cfg, desc)
        _, series, _, _ = analyze_system(cfg, seq, split)
        rates, n = series.lambda_e, series.indices

    chi_hat = cfg.chi_hat if cfg.chi_hat is not None else (
        cfg.rates.chi_hat_u if cfg.rates is not None else None)
    if chi_hat is None:
        raise PreconditionViolated("eht needs chi_hat (or rates.chi_hat_u) in the config")
    columns = shortfall_columns(rates, chi_hat)
    store.save_table('eht', pd.DataFrame({'n': n, 'lambda_e': rates, **columns}))
    logger.info("%d effective hyperbolic times among %d indices", sum(columns['in_gamma']), len(rates))
    return 0


def _constant_params(cfg: RunConfig, n_min: int, count: int) -> ParamSeq:
    zeros = np.zeros(count)
    return ParamSeq.from_values(n_min, np.full(count, cfg.grow.radius), zeros, zeros,
                                np.full(count, cfg.grow.kappa))


def cmd_grow(cfg: RunConfig, desc: SystemDescriptor, store: RunStore, strict: bool) -> int:
    seq, split = load_system(cfg, desc)
    start = seq.n_min if cfg.grow.start is None else cfg.grow.start
    stop = min(start + cfg.grow.steps, seq.n_max + 1)

    lin = None
    if cfg.rates is not None and cfg.seeds is not None:
        lin, series, _, _ = analyze_system(cfg, seq.restrict(start, stop - 1), split)
        params = build_params_theorem_d(lin, series, seq.alpha, cfg.rates, cfg.seeds, L=seq.L)
        store.save_params(params)
    else:
        params = _constant_params(cfg, start, stop - start + 1)

    r0 = float(params.r[0])
    if cfg.grow.manifold == 'zero':
        m0 = AdmissibleManifold.zero(split.u_dim, split.s_dim, r0)
    else:
        m0 = AdmissibleManifold.load(Path(cfg.grow.manifold).read_text())

    manifolds, reports = push(seq, split, lin, params, m0, start, stop, strict)
    for n, m in zip(range(start, stop + 1), manifolds):
        store.save_manifold(f"psi_{n}", m)
    store.save_steps(reports)
    logger.info("Grew %d manifolds from index %d", len(manifolds), start)
    return 0


def cmd_unstable(cfg: RunConfig, desc: SystemDescriptor, store: RunStore) -> int:
    """Local unstable manifolds of the system indexed on [-window, -1]"""
    window = cfg.unstable.window
    desc = desc.model_copy(update={'n_min': -window, 'n_max': -1})
    seq, split = desc.instantiate()
    family, report = unstable_solve(seq, split, cfg.unstable.radius, k_max=window,
                                    family_length=cfg.unstable.family_length)
    for n in sorted(family):
        store.save_manifold(f"unstable_{n}", family[n])
    store.save_report('unstable_report', report)
    return 0


def cmd_close(cfg: RunConfig, desc: SystemDescriptor, store: RunStore) -> int:
    segment = cfg.segment
    if segment is None:
        raise PreconditionViolated("close needs a 'segment' section in the config")
    chart = None
    offset = frame_change = None
    if desc.name == 'cat_germ':
        point = segment.point if segment.point is not None else desc.params.get('point')
        chart = cat_orbit(point, segment.p, n_min=desc.n_min)
        seq, split = chart.seq, chart.split
        offset, frame_change = chart.return_offset(segment.p), chart.frame_change(segment.p)
        L = chart.L if segment.L is None else segment.L
    else:
        seq, split = desc.instantiate()
        seq = seq.restrict(seq.n_min, seq.n_min + segment.p - 1)
        L = seq.L if segment.L is None else segment.L
        if L is None:
            L = extract_linear_data(seq, split, seed=cfg.seed).global_L()

    report = ceh_check(seq, split, segment.chi_hat_u, segment.chi_hat_s, cfg.thresholds.theta_bar,
                       L, segment.p, offset=offset, frame_change=frame_change,
                       chi_bar_u=segment.chi_bar_u)
    store.save_report('segment_report', report)
    result = close_orbit(seq, split, report, chart, segment.radius, chi_bar_u=segment.chi_bar_u)
    store.save_report('periodic_point', result)
    return 0


def cmd_report(store: RunStore) -> int:
    viz = HyperbolicityVisualizations
    figures = []
    frame = None
    if store.has('effective_series.csv'):
        frame = store.get_series()
    elif store.has('eht.csv'):
        frame = store.get_table('eht')
    if frame is not None:
        figures += [viz.create_effective_rate_chart(frame), viz.create_m_sequence_chart(frame)]
    if store.has('params.csv'):
        figures.append(viz.create_parameter_chart(store.get_params()))
    if store.has('transform_steps.csv'):
        figures.append(viz.create_transform_steps_chart(store.get_steps()))
    names = store.list_manifolds()
    if names:
        figures.append(viz.create_manifold_chart({name: store.get_manifold(name) for name in names}))
    if not figures:
        raise PreconditionViolated(f"No run outputs found in {store.out_dir}")
    viz.write_report(figures, store.out_dir / 'report.html')
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='app.py',
        description="Effective hyperbolicity diagnostics, graph transforms and orbit closing")
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', help="run configuration JSON")
    parser.add_argument('--out', help="output directory (overrides the config)")
    parser.add_argument('--seed', type=int, help="random seed (overrides the config)")
    parser.add_argument('--strict-class', action='store_true',
                        help="fail when a transformed manifold leaves its class")
    parser.add_argument('--tol', action='append', default=[], metavar='KEY=VAL',
                        help="override an entry of config.TOLERANCES")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=config.LOG_LEVEL,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        if args.command == 'report':
            out = args.out
            if out is None and args.config:
                out = RunConfig.load(args.config).out
            return cmd_report(RunStore(out or config.OUTPUT_DIR))

        if not args.config:
            raise PreconditionViolated(f"'{args.command}' needs --config")
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        config.RANDOM_SEED = cfg.seed
        applied = config.override_tolerances(
            [f"{k}={v}" for k, v in cfg.tolerances.items()] + list(args.tol))
        store = RunStore(args.out or cfg.out)
        desc = cfg.descriptor(Path(args.config).parent)
        store.save_run(args.command, cfg.seed, cfg.model_dump(mode='json'), applied)

        if args.command == 'analyze':
            return cmd_analyze(cfg, desc, store)
        if args.command == 'eht':
            return cmd_eht(cfg, desc, store)
        if args.command == 'grow':
            return cmd_grow(cfg, desc, store, args.strict_class or cfg.strict_class)
        if args.command == 'unstable':
            return cmd_unstable(cfg, desc, store)
        return cmd_close(cfg, desc, store)

    except HyperbolicityError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return 1
    except (ValidationError, KeyError, FileNotFoundError) as e:
        logger.error("Invalid configuration: %s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
