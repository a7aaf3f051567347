"""End-to-end tests of the command-line entry point."""

import json
import math
from fractions import Fraction

import pytest

from spectral_cli import (
    EXACT_EQUAL,
    EXIT_CONFIG_ERROR,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_VERIFICATION_FAILED,
    build_parser,
    load_spectrum,
    run,
)
from utils.formatting import read_csv, read_json

SMALL_VERIFY = """
bounds:
  levels: 3
  pmax: 3
  nmax: 3
verify:
  alpha_sweep: 2
  concurrency: 4
"""


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch, tmp_path):
    """Ignore the repository config unless a test passes --config."""
    monkeypatch.setenv('CONFIG_PATH', str(tmp_path / 'missing.yaml'))


@pytest.mark.unit
class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_common_flags_on_every_command(self):
        for command in ('engineer', 'polys', 'verify', 'riccati'):
            args = build_parser().parse_args([command, '--format', 'json', '--out', 'x'])
            assert (args.command, args.format, args.out) == (command, 'json', 'x')

    def test_choices_enforced(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(['riccati', '--solver', 'bisection'])


@pytest.mark.integration
class TestEngineer:
    def test_pair_spectrum(self, tmp_path):
        out = tmp_path / 'run'
        code = run(['engineer', '--gaps', '1,2', '--levels', '6', '--out', str(out)])
        assert code == EXIT_OK

        spectrum = read_json(out / 'spectrum.json')
        assert spectrum['gaps'] == ['1', '2']
        level1, level2 = spectrum['levels']
        assert [e['energy'] for e in level1['entries']] == ['0', '1', '3', '4', '6', '7']
        assert [e['energy'] for e in level2['entries']] == ['1', '3', '4', '6', '7', '9']

        tables = load_spectrum(out / 'spectrum.json')
        assert tables[0].energies == tuple(Fraction(e) for e in (0, 1, 3, 4, 6, 7))

    def test_tables(self, tmp_path):
        out = tmp_path / 'run'
        assert run(['engineer', '--gaps', '1,2', '--levels', '3', '--out', str(out)]) == EXIT_OK

        potentials = read_csv(out / 'potentials.csv')
        assert list(potentials.columns) == ['u', 'V1', 'V2']
        assert len(potentials) == 2001
        center = potentials.iloc[1000]
        assert center['u'] == 0.0
        assert math.isnan(center['V1'])

        states = read_csv(out / 'states.csv')
        assert [c for c in states.columns if c.startswith('psi_2')] == [
            'psi_2_0',
            'psi_2_1',
            'psi_2_2',
        ]
        # psi_{2,0} diverges at the center, psi_{1,0} vanishes there.
        assert math.isnan(states.iloc[1000]['psi_2_0'])
        assert states.iloc[1000]['psi_1_0'] == 0.0

    def test_harmonic_potential(self, tmp_path):
        out = tmp_path / 'run'
        assert run(['engineer', '--gaps', '2', '--levels', '2', '--out', str(out)]) == EXIT_OK
        potentials = read_csv(out / 'potentials.csv')
        u, v1 = potentials['u'].to_numpy(), potentials['V1'].to_numpy()
        assert v1 == pytest.approx(u**2 - 1, abs=1e-12)

        summary = read_json(out / 'summary.json')
        assert summary['period'] == 1
        assert summary['potentials'][0]['const_term'] == '-1'
        assert summary['normalization']['N0'] == pytest.approx(1.0)

    def test_summary_notices(self, tmp_path):
        out = tmp_path / 'pair'
        assert run(['engineer', '--gaps', '1,2', '--levels', '2', '--out', str(out)]) == EXIT_OK
        summary = read_json(out / 'summary.json')
        assert summary['alpha'] == '1/6'
        assert summary['degenerate'] is False
        assert any('V_1 is unbounded below' in n for n in summary['notices'])
        assert summary['superpotentials'][0]['pole_coeff'] == '-1/6'
        assert summary['potentials'][0]['frobenius_exponents'] == ['1/6', '5/6']

        out = tmp_path / 'equal'
        assert run(['engineer', '--gaps', '2,2', '--levels', '2', '--out', str(out)]) == EXIT_OK
        summary = read_json(out / 'summary.json')
        assert summary['degenerate'] is True
        assert any(n.startswith('alpha = 0') for n in summary['notices'])

    def test_shifted_center_and_energy(self, tmp_path):
        out = tmp_path / 'run'
        args = ['engineer', '--gaps', '1,3', '--levels', '2', '--e0=-1/2', '--u0', '3/2']
        assert run([*args, '--out', str(out)]) == EXIT_OK
        spectrum = read_json(out / 'spectrum.json')
        assert spectrum['u0'] == '3/2'
        assert [e['energy'] for e in spectrum['levels'][0]['entries']] == ['-1/2', '1/2']
        assert read_csv(out / 'potentials.csv').iloc[1000]['u'] == 1.5

    def test_json_tables(self, tmp_path):
        out = tmp_path / 'run'
        code = run(
            ['engineer', '--gaps', '1,2', '--levels', '2', '--format', 'json', '--out', str(out)]
        )
        assert code == EXIT_OK
        document = json.loads((out / 'potentials.json').read_text())
        assert document['schema'] == 1
        assert document['columns']['V1'][1000] is None
        assert len(document['columns']['u']) == 2001

    def test_length_scale(self, tmp_path, monkeypatch):
        monkeypatch.setenv('OUTPUT__LENGTH_SCALE', '2.0')
        out = tmp_path / 'run'
        assert run(['engineer', '--gaps', '2', '--levels', '1', '--out', str(out)]) == EXIT_OK
        states = read_csv(out / 'states.csv')
        # u doubles and psi shrinks by sqrt(2); the last row sits at 2 * 6 / sqrt(c), c = 1.
        assert states['u'].iloc[-1] == pytest.approx(12.0)
        assert states['psi_1_0'].iloc[1000] == pytest.approx(math.pi**-0.25 / math.sqrt(2))

    def test_bad_gap(self, tmp_path):
        assert run(['engineer', '--gaps', '1,0', '--out', str(tmp_path)]) == EXIT_CONFIG_ERROR

    def test_bad_config_file(self, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text('riccati:\n  order: 4\n')
        code = run(['engineer', '--config', str(path), '--out', str(tmp_path / 'run')])
        assert code == EXIT_CONFIG_ERROR

    @pytest.mark.slow
    def test_period_three_goes_numeric(self, tmp_path):
        out = tmp_path / 'run'
        code = run(['engineer', '--gaps', '1,2,3', '--out', str(out)])
        assert code in (EXIT_OK, EXIT_NO_CONVERGENCE)
        record = read_json(out / 'riccati.json')
        assert record['period'] == 3
        assert record['exploratory'] is True


@pytest.mark.integration
class TestPolys:
    def test_route_table(self, tmp_path):
        target = tmp_path / 'polys.csv'
        code = run(
            ['polys', '--gamma', '1/2', '--pmax', '4', '--hermite-nmax', '4', '--out', str(target)]
        )
        assert code == EXIT_OK
        table = read_csv(target)
        assert len(table) == 5 * 3 + 5 * 4
        assert set(table['verdict']) == {EXACT_EQUAL}
        row = table[(table['family'] == 'laguerre') & (table['order'] == 1)]
        assert set(row['route']) == {'series', 'rodrigues_plus', 'rodrigues_minus'}
        assert set(row['coeffs']) == {'3/2 -1'}

    def test_json_rows(self, tmp_path):
        target = tmp_path / 'polys.json'
        code = run(
            [
                'polys',
                '--gamma=-1/3',
                '--pmax',
                '3',
                '--hermite-nmax',
                '2',
                '--format',
                'json',
                '--out',
                str(target),
            ]
        )
        assert code == EXIT_OK
        rows = read_json(target)['rows']
        hermite2 = [r for r in rows if r['family'] == 'hermite' and r['order'] == 2]
        assert {r['route'] for r in hermite2} == {'ladder', 'three_term', 'rodrigues', 'laguerre'}
        assert all(r['coeffs'] == ['-2', '0', '4'] for r in hermite2)
        assert all(r['parameter'] == '-1/3' for r in rows if r['family'] == 'laguerre')

    def test_order_limit(self, tmp_path):
        code = run(['polys', '--pmax', '65', '--out', str(tmp_path / 'p.csv')])
        assert code == EXIT_CONFIG_ERROR

    def test_float_gamma_rejected_in_yaml(self, tmp_path):
        path = tmp_path / 'job.yaml'
        path.write_text('polys:\n  gamma: 0.5\n')
        code = run(['polys', '--config', str(path), '--out', str(tmp_path / 'p.csv')])
        assert code == EXIT_CONFIG_ERROR


@pytest.mark.integration
class TestRiccati:
    def test_pair_converges(self, tmp_path):
        target = tmp_path / 'r.json'
        assert run(['riccati', '--gaps', '1,3', '--out', str(target)]) == EXIT_OK
        record = read_json(target)
        assert record['outcome'] == 'converged'
        poles = [w['pole_coeff'] for w in record['superpotentials']]
        assert poles == pytest.approx([-0.25, 0.25], abs=1e-6)

    def test_no_convergence_exit_code(self, tmp_path):
        target = tmp_path / 'r.json'
        args = ['riccati', '--gaps', '1,3', '--ansatz', 'grid', '--max-iter', '5']
        code = run([*args, '--out', str(target)])
        assert code == EXIT_NO_CONVERGENCE
        assert read_json(target)['outcome'] == 'no_convergence'

    def test_even_order_rejected(self, tmp_path):
        code = run(['riccati', '--gaps', '1,3', '--order', '6', '--out', str(tmp_path / 'r.json')])
        assert code == EXIT_CONFIG_ERROR

    def test_nonpositive_tolerance_rejected(self, tmp_path):
        code = run(['riccati', '--tol', '0', '--out', str(tmp_path / 'r.json')])
        assert code == EXIT_CONFIG_ERROR


@pytest.mark.integration
@pytest.mark.slow
class TestVerify:
    def test_suite_passes(self, tmp_path, capsys):
        config = tmp_path / 'verify.yaml'
        config.write_text(SMALL_VERIFY)
        target = tmp_path / 'verification.json'
        code = run(['verify', '--config', str(config), '--out', str(target)])
        report = read_json(target)
        failed = [c['name'] for c in report['checks'] if not c['passed']]
        assert code == EXIT_OK, failed
        assert report['passed'] is True
        assert set(report['alpha_matrix']) == {'0', '1/4'}
        assert f'{report["total"]}/{report["total"]} checks passed' in capsys.readouterr().out

    def test_perturbed_gap_fails(self, tmp_path):
        config = tmp_path / 'verify.yaml'
        config.write_text(SMALL_VERIFY)
        target = tmp_path / 'verification.json'
        code = run(
            ['verify', '--config', str(config), '--perturb-gap', '0.1', '--out', str(target)]
        )
        assert code == EXIT_VERIFICATION_FAILED
        report = read_json(target)
        failed = {c['name'] for c in report['checks'] if not c['passed']}
        assert failed == {'numeric.intertwine[alpha=0]', 'numeric.intertwine[alpha=1/4]'}
