#!/usr/bin/env python3
"""
Spectral hierarchy CLI - engineer potentials whose spectra repeat prescribed gaps
"""

import argparse
import asyncio
import logging
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from config.schema import JobConfig, describe_validation_error, load_config
from models.response_types import (
    PolysRow,
    SpectrumDocument,
    SpectrumLevel,
    SummaryDocument,
    VerificationReport,
)
from services.factories import GridFactory, HierarchySpecFactory, RiccatiProblemFactory
from services.verification_service import VerificationService, build_checks, build_report
from spectral.errors import ConfigError, NoConvergence, SingularPoint, SpectralError
from spectral.exactnum import PolyQ, as_rational
from spectral.hierarchy import (
    HierarchySpec,
    SpectrumTable,
    build_eigenstate,
    build_hierarchy,
    spectrum_table,
    state_scale_factor,
    wavefunction_eval,
)
from spectral.polyfactory import (
    HERMITE_ROUTES,
    Sign,
    hermite,
    hermite_from_laguerre,
    laguerre_generalized_rodrigues,
    laguerre_series,
)
from spectral.riccati import solve_periodic
from utils.formatting import (
    format_rational,
    format_rationals,
    parse_rational,
    read_json,
    write_csv,
    write_json,
)

# Load .env file from the project directory
project_dir = Path(__file__).parent.parent
env_file = project_dir / '.env'
if env_file.exists():
    load_dotenv(env_file)
else:
    # Try current working directory as fallback
    load_dotenv()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NO_CONVERGENCE = 3

EXACT_EQUAL = 'exact-equal'
MISMATCH = 'MISMATCH'

logger = logging.getLogger(__name__)


def configure_logging(level: str | None = None) -> None:
    level_name = (level or os.getenv('LOG_LEVEL') or 'INFO').upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config',
        type=Path,
        help='Path to YAML configuration file (default: config/config.yaml)',
    )
    common.add_argument(
        '--log-level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='Logging level (default: LOG_LEVEL or INFO)',
    )
    common.add_argument('--format', choices=['csv', 'json'], help='Table output format')
    common.add_argument('--out', help='Output directory (engineer) or file')

    parser = argparse.ArgumentParser(
        description='Engineer potentials with periodic spectra and verify their closed forms'
    )
    sub = parser.add_subparsers(dest='command', required=True)

    engineer = sub.add_parser(
        'engineer', parents=[common], help='Potentials, spectra and eigenstates for given gaps'
    )
    engineer.add_argument('--gaps', help='Comma-separated gaps as exact rationals, e.g. 1,2')
    engineer.add_argument('--levels', type=int, help='Energies and states per Hamiltonian')
    engineer.add_argument('--e0', help='Ground energy E_0 (exact rational)')
    engineer.add_argument('--u0', help='Center u_0 (exact rational)')

    polys = sub.add_parser(
        'polys', parents=[common], help='Laguerre and Hermite coefficient tables from every route'
    )
    polys.add_argument('--gamma', help='Laguerre parameter (exact rational)')
    polys.add_argument('--pmax', type=int, help='Highest Laguerre order (at most 64)')
    polys.add_argument('--hermite-nmax', type=int, help='Highest Hermite order (at most 64)')

    verify = sub.add_parser('verify', parents=[common], help='Run the exact and numeric suites')
    verify.add_argument('--alpha-sweep', type=int, help='Number of sampled alpha values')
    verify.add_argument(
        '--perturb-gap', type=float, help='Inject a gap error into the intertwining check'
    )

    riccati = sub.add_parser(
        'riccati', parents=[common], help='Solve the periodic Riccati closure numerically'
    )
    riccati.add_argument('--gaps', help='Comma-separated gaps as exact rationals, e.g. 1,2,3')
    riccati.add_argument('--u0', help='Center u_0 (exact rational)')
    riccati.add_argument('--ansatz', choices=['pole_poly', 'grid'], help='Ansatz family')
    riccati.add_argument('--order', type=int, help='Highest odd power of the series part')
    riccati.add_argument('--solver', choices=['newton', 'least_squares'], help='Solver')
    riccati.add_argument('--max-iter', type=int, help='Iteration budget per fit')
    riccati.add_argument('--tol', type=float, help='Certified residual tolerance')
    return parser


def load_job_config(args: argparse.Namespace) -> JobConfig:
    """Configuration from YAML, environment and CLI flags, in increasing priority."""
    if getattr(args, 'config', None):
        os.environ['CONFIG_PATH'] = str(args.config)
    config = load_config()
    try:
        config.apply_cli_overrides(args)
    except ValidationError as e:
        raise ConfigError(describe_validation_error(e)) from e

    logger.info('Using configuration:')
    logger.info(f'  - Command: {config.command}')
    logger.info(f'  - Gaps: {", ".join(config.hierarchy.gaps)}')
    logger.info(f'  - E0 / u0: {config.hierarchy.e0} / {config.hierarchy.u0}')
    target = config.output.file or config.output.directory
    logger.info(f'  - Output: {config.output.format} -> {target}')
    return config


def _output_file(config: JobConfig, default_name: str) -> Path:
    return config.output.file or config.output.directory / default_name


def _write_table(config: JobConfig, stem: str, frame: pd.DataFrame) -> Path:
    directory = config.output.directory
    match config.output.format:
        case 'csv':
            return write_csv(directory / f'{stem}.csv', frame)
        case 'json':
            columns = {
                name: [None if math.isnan(x) else x for x in frame[name].astype(float)]
                for name in frame.columns
            }
            return write_json(directory / f'{stem}.json', {'schema': 1, 'columns': columns})


def _sample_state(state, spec: HierarchySpec, u: np.ndarray) -> np.ndarray:
    try:
        return np.asarray(wavefunction_eval(state, spec, u), dtype=float)
    except SingularPoint:
        values = np.full(u.shape, np.nan)
        off_center = u != float(spec.center)
        values[off_center] = wavefunction_eval(state, spec, u[off_center])
        return values


def spectrum_document(spec: HierarchySpec, tables: list[SpectrumTable]) -> SpectrumDocument:
    return SpectrumDocument(
        schema=1,
        gaps=format_rationals(spec.gaps),
        e0=format_rational(spec.ground_energy),
        u0=format_rational(spec.center),
        levels=[
            SpectrumLevel(
                level=t.level,
                entries=[{'n': n, 'energy': format_rational(e)} for n, e in t.entries],
            )
            for t in tables
        ],
    )


def load_spectrum(path: Path) -> list[SpectrumTable]:
    """Read spectrum.json back into exact SpectrumTable values."""
    document = read_json(path)
    if document.get('schema') != 1:
        raise ValueError(f'{path}: unsupported spectrum schema {document.get("schema")!r}')
    return [
        SpectrumTable(
            level=int(level['level']),
            entries=tuple(
                (int(e['n']), parse_rational(e['energy'])) for e in level['entries']
            ),
        )
        for level in document['levels']
    ]


def summary_document(spec: HierarchySpec, config: JobConfig) -> SummaryDocument:
    hierarchy = build_hierarchy(spec)
    alpha = spec.alpha
    degenerate = spec.period == 2 and alpha == 0
    notices = []
    if degenerate:
        notices.append(
            'alpha = 0: equal gaps, the pair reduces to the harmonic oscillator (period 1)'
        )
    for lam, v in enumerate(hierarchy.potentials, start=1):
        if not v.bounded_below:
            notices.append(f'V_{lam} is unbounded below at u0 (inverse-square coefficient < 0)')

    states = []
    for lam in range(1, spec.period + 1):
        for n in range(config.bounds.levels):
            s = build_eigenstate(spec, lam, n)
            states.append(
                {
                    'level': lam,
                    'n': n,
                    'sigma': format_rational(s.sigma),
                    'norm2': format_rational(s.norm2),
                    'gamma_base': format_rational(s.gamma_base),
                }
            )
    return SummaryDocument(
        schema=1,
        period=spec.period,
        gaps=format_rationals(spec.gaps),
        alpha=format_rational(alpha),
        degenerate=degenerate,
        notices=notices,
        superpotentials=[
            {
                'level': lam,
                'linear_coeff': format_rational(w.linear_coeff),
                'pole_coeff': format_rational(w.pole_coeff),
            }
            for lam, w in enumerate(hierarchy.superpotentials, start=1)
        ],
        potentials=[
            {
                'level': lam,
                'quad_coeff': format_rational(v.quad_coeff),
                'invsq_coeff': format_rational(v.invsq_coeff),
                'const_term': format_rational(v.const_term),
                'bounded_below': v.bounded_below,
                'frobenius_exponents': [str(s) for s in v.frobenius_exponents()],
            }
            for lam, v in enumerate(hierarchy.potentials, start=1)
        ],
        normalization={'N0': state_scale_factor(spec), 'states': states},
        length_scale=config.output.length_scale,
    )


def cmd_engineer(config: JobConfig) -> int:
    spec = HierarchySpecFactory.create(config.hierarchy)
    if not spec.is_closed_form:
        logger.warning(
            f'N={spec.period} has no closed form; running the numerical Riccati solver instead'
        )
        return cmd_riccati(config)

    hierarchy = build_hierarchy(spec)
    grid = GridFactory.create(config.grid, spec, 'output')
    u0 = float(spec.center)
    u = grid.nodes()
    # Put the middle node exactly on the singular point.
    u[np.abs(u - u0) < 1e-9 * grid.spacing] = u0
    scale = config.output.length_scale
    u_out = u0 + (u - u0) * scale

    potentials = {'u': u_out}
    for lam, v in enumerate(hierarchy.potentials, start=1):
        values = np.asarray(v.value(u), dtype=float)
        potentials[f'V{lam}'] = np.where(np.isfinite(values), values, np.nan)
    _write_table(config, 'potentials', pd.DataFrame(potentials))

    states = {'u': u_out}
    for lam in range(1, spec.period + 1):
        for n in range(config.bounds.levels):
            psi = _sample_state(build_eigenstate(spec, lam, n), spec, u)
            states[f'psi_{lam}_{n}'] = psi / math.sqrt(scale)
    _write_table(config, 'states', pd.DataFrame(states))

    tables = [spectrum_table(spec, lam, config.bounds.levels) for lam in range(1, spec.period + 1)]
    write_json(config.output.directory / 'spectrum.json', spectrum_document(spec, tables))

    summary = summary_document(spec, config)
    for notice in summary['notices']:
        logger.info(notice)
    write_json(config.output.directory / 'summary.json', summary)
    return EXIT_OK


def _laguerre_rows(gamma: Fraction, pmax: int) -> list[PolysRow]:
    rows: list[PolysRow] = []
    for p in range(pmax + 1):
        reference = laguerre_series(gamma, p)
        routes: dict[str, PolyQ | None] = {'series': reference}
        for sign in Sign:
            try:
                routes[f'rodrigues_{sign.value}'] = laguerre_generalized_rodrigues(gamma, p, sign)
            except SpectralError as e:
                logger.error(f'Rodrigues({sign.value}) failed at gamma={gamma}, p={p}: {e}')
                routes[f'rodrigues_{sign.value}'] = None
        verdict = EXACT_EQUAL if all(r == reference for r in routes.values()) else MISMATCH
        rows.extend(_route_rows('laguerre', format_rational(gamma), p, routes, verdict))
    return rows


def _hermite_rows(nmax: int) -> list[PolysRow]:
    rows: list[PolysRow] = []
    for n in range(nmax + 1):
        routes: dict[str, PolyQ | None] = {route: hermite(n, route) for route in HERMITE_ROUTES}
        routes['laguerre'] = hermite_from_laguerre(n)
        reference = routes['three_term']
        verdict = EXACT_EQUAL if all(r == reference for r in routes.values()) else MISMATCH
        rows.extend(_route_rows('hermite', '', n, routes, verdict))
    return rows


def _route_rows(
    family: str, parameter: str, order: int, routes: dict[str, PolyQ | None], verdict: str
) -> list[PolysRow]:
    return [
        PolysRow(
            family=family,
            parameter=parameter,
            order=order,
            route=route,
            coeffs=format_rationals(poly.coeffs) if poly is not None else [],
            verdict=verdict,
        )
        for route, poly in routes.items()
    ]


def cmd_polys(config: JobConfig) -> int:
    gamma = as_rational(config.polys.gamma)
    rows = _laguerre_rows(gamma, config.polys.pmax) + _hermite_rows(config.polys.hermite_nmax)
    mismatches = sum(1 for r in rows if r['verdict'] == MISMATCH)

    match config.output.format:
        case 'csv':
            frame = pd.DataFrame(
                [{**r, 'coeffs': ' '.join(r['coeffs'])} for r in rows],
                columns=['family', 'parameter', 'order', 'route', 'coeffs', 'verdict'],
            )
            write_csv(_output_file(config, 'polys.csv'), frame)
        case 'json':
            write_json(_output_file(config, 'polys.json'), {'schema': 1, 'rows': rows})

    if mismatches:
        logger.error(f'{mismatches} polynomial rows disagree between routes')
        return EXIT_VERIFICATION_FAILED
    logger.info(f'All {len(rows)} route rows are exactly equal')
    return EXIT_OK


def print_report(report: VerificationReport) -> None:
    for check in report['checks']:
        status = 'PASS' if check['passed'] else 'FAIL'
        print(f'{status}  {check["name"]}  {check["detail"]}')
    if report['alpha_matrix']:
        families = sorted({f for row in report['alpha_matrix'].values() for f in row})
        print()
        print('alpha'.ljust(8) + ''.join(f.ljust(26) for f in families))
        for alpha, row in report['alpha_matrix'].items():
            cells = ''.join(('ok' if row.get(f) else 'FAIL').ljust(26) for f in families)
            print(alpha.ljust(8) + cells)
    print()
    print(f'{report["total"] - report["failures"]}/{report["total"]} checks passed')


def cmd_verify(config: JobConfig) -> int:
    checks = build_checks(config)
    service = VerificationService(config.verify.concurrency)
    results = asyncio.run(service.run(checks))
    report = build_report(results)
    write_json(_output_file(config, 'verification.json'), report)
    print_report(report)
    return EXIT_OK if report['passed'] else EXIT_VERIFICATION_FAILED


def cmd_riccati(config: JobConfig) -> int:
    spec = HierarchySpecFactory.create(config.hierarchy)
    problem = RiccatiProblemFactory.create(config.riccati, config.tolerances, spec)
    solution = solve_periodic(problem)
    write_json(_output_file(config, 'riccati.json'), solution.to_record())
    try:
        solution.raise_for_outcome()
    except NoConvergence as e:
        logger.warning(f'{type(e).__name__}: {e}')
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


COMMANDS = {
    'engineer': cmd_engineer,
    'polys': cmd_polys,
    'verify': cmd_verify,
    'riccati': cmd_riccati,
}


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = load_job_config(args)
        return COMMANDS[config.command](config)
    except ConfigError as e:
        logger.error(f'Configuration error: {e}')
        return EXIT_CONFIG_ERROR


def main():
    """Main function to run the spectral hierarchy CLI."""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        logger.info('Interrupted, shutting down...')
        sys.exit(EXIT_VERIFICATION_FAILED)
    except Exception as e:
        logger.error(f'Error running spectral hierarchy CLI: {str(e)}')
        raise


if __name__ == '__main__':
    main()
