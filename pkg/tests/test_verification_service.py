"""Tests for the verification service and its check catalogue."""

import threading
import time
from fractions import Fraction

import pytest

from services.verification_service import (
    CheckResult,
    VerificationCheck,
    VerificationService,
    alpha_samples,
    build_checks,
    build_report,
    gamma_samples,
)


def _small(config):
    config.bounds.levels = 4
    config.bounds.pmax = 4
    config.bounds.nmax = 4
    config.verify.alpha_sweep = 3
    return config


@pytest.mark.unit
class TestSamples:
    def test_alpha_order(self):
        assert alpha_samples(9) == [
            Fraction(0),
            Fraction(1, 4),
            Fraction(-1, 4),
            Fraction(1, 3),
            Fraction(-1, 3),
            Fraction(1, 5),
            Fraction(-1, 5),
            Fraction(2, 5),
            Fraction(-2, 5),
        ]

    def test_alpha_range(self):
        values = alpha_samples(40)
        assert len(values) == len(set(values)) == 40
        assert all(-Fraction(1, 2) < a < Fraction(1, 2) for a in values)

    def test_single_sample_is_degenerate(self):
        assert alpha_samples(1) == [0]

    def test_gammas_cover_states(self):
        gammas = gamma_samples([Fraction(1, 4)])
        assert Fraction(-1, 4) in gammas
        assert Fraction(1, 4) in gammas
        assert Fraction(3, 4) in gammas
        assert gammas == sorted(set(gammas))


@pytest.mark.unit
class TestCatalogue:
    def test_names_unique(self, config):
        checks = build_checks(config)
        names = [c.name for c in checks]
        assert len(names) == len(set(names))
        assert {c.suite for c in checks} == {'exact', 'numeric'}

    def test_alpha_families(self, config):
        config.verify.alpha_sweep = 2
        checks = [c for c in build_checks(config) if c.alpha is not None]
        assert len(checks) == 2 * 7
        assert 'exact.closed_form[alpha=1/4]' in {c.name for c in checks}
        assert {c.family for c in checks} >= {'numeric.intertwine', 'exact.ladder_roundtrip'}

    def test_fixed_checks(self, config):
        names = {c.name for c in build_checks(config)}
        assert {
            'numeric.fd_spectrum[N=1]',
            'numeric.fd_spectrum[N=2]',
            'numeric.richardson[N=1]',
            'numeric.richardson[N=2]',
            'numeric.riccati_solver[N=3 equal]',
        } <= names


@pytest.mark.unit
class TestVerificationService:
    @pytest.mark.asyncio
    async def test_failures_and_crashes_are_collected(self):
        checks = [
            VerificationCheck('b.pass', 'exact', lambda: (True, 'fine')),
            VerificationCheck('a.fail', 'exact', lambda: (False, 'off by one')),
            VerificationCheck('c.crash', 'numeric', lambda: (1 / 0, '')),
        ]
        results = await VerificationService(concurrency=2).run(checks)
        assert [r.name for r in results] == ['a.fail', 'b.pass', 'c.crash']
        assert [r.passed for r in results] == [False, True, False]
        assert 'ZeroDivisionError' in results[2].detail

    @pytest.mark.asyncio
    async def test_duplicate_names(self):
        check = VerificationCheck('x', 'exact', lambda: (True, ''))
        with pytest.raises(ValueError):
            await VerificationService().run([check, check])

    @pytest.mark.asyncio
    async def test_concurrency_bound(self):
        lock = threading.Lock()
        state = {'running': 0, 'peak': 0}

        def slow():
            with lock:
                state['running'] += 1
                state['peak'] = max(state['peak'], state['running'])
            time.sleep(0.05)
            with lock:
                state['running'] -= 1
            return True, ''

        checks = [VerificationCheck(f'c{i}', 'numeric', slow) for i in range(8)]
        results = await VerificationService(concurrency=2).run(checks)
        assert all(r.passed for r in results)
        assert state['peak'] <= 2

    def test_concurrency_from_env(self, monkeypatch):
        monkeypatch.setenv('VERIFY_CONCURRENCY', '3')
        assert VerificationService()._limit == 3
        assert VerificationService(concurrency=5)._limit == 5

    def test_report(self):
        results = [
            CheckResult('exact.x[alpha=0]', 'exact', True, family='exact.x', alpha=Fraction(0)),
            CheckResult(
                'exact.x[alpha=1/4]', 'exact', False, 'bad', family='exact.x', alpha=Fraction(1, 4)
            ),
            CheckResult('numeric.y', 'numeric', True),
        ]
        report = build_report(results)
        assert report['passed'] is False
        assert (report['total'], report['failures']) == (3, 1)
        assert report['alpha_matrix'] == {'0': {'exact.x': True}, '1/4': {'exact.x': False}}
        assert report['checks'][1]['alpha'] == '1/4'
        assert 'alpha' not in report['checks'][2]


@pytest.mark.integration
class TestSuites:
    @pytest.mark.asyncio
    async def test_exact_suite_passes(self, config):
        checks = [c for c in build_checks(_small(config)) if c.suite == 'exact']
        results = await VerificationService(concurrency=4).run(checks)
        failed = [(r.name, r.detail) for r in results if not r.passed]
        assert not failed

    @pytest.mark.asyncio
    async def test_intertwine_catches_perturbed_gap(self, config):
        config = _small(config)
        config.verify.perturb_gap = 0.1
        checks = [c for c in build_checks(config) if c.family == 'numeric.intertwine']
        results = await VerificationService().run(checks)
        assert results
        assert not any(r.passed for r in results)

    @pytest.mark.asyncio
    async def test_singular_spectra_and_equal_gaps(self, config):
        wanted = {
            'numeric.fd_spectrum[N=2]',
            'numeric.richardson[N=2]',
            'numeric.riccati_solver[N=3 equal]',
        }
        checks = [c for c in build_checks(_small(config)) if c.name in wanted]
        assert len(checks) == len(wanted)
        results = await VerificationService().run(checks)
        failed = [(r.name, r.detail) for r in results if not r.passed]
        assert not failed

    @pytest.mark.slow
    @pytest.mark.asyncio
    async def test_full_suite_passes(self, config):
        results = await VerificationService().run(build_checks(_small(config)))
        failed = [(r.name, r.detail) for r in results if not r.passed]
        assert not failed
