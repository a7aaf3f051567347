"""Verification service running the exact and numeric check suites."""

import asyncio
import logging
import math
import os
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from config.schema import JobConfig
from models.response_types import CheckRecord, VerificationReport
from services.factories import GridFactory
from spectral.exactnum import PolyQ
from spectral.hierarchy import (
    HierarchySpec,
    apply_ladder,
    build_eigenstate,
    build_hierarchy,
    eigenstate_closed_form,
    energy_level,
    lowered_eigenstate,
    lowering,
    raising,
    schrodinger_residual,
    symbolic_riccati_residual,
    wavefunction_eval,
)
from spectral.numverify import (
    Grid,
    count_nodes,
    expected_node_count,
    fd_spectrum,
    gram_matrix,
    hermite_weighted_product,
    intertwine_residual,
    richardson_order,
)
from spectral.polyfactory import (
    HERMITE_ROUTES,
    HermiteOde,
    LaguerreOde,
    Sign,
    hermite,
    hermite_from_laguerre,
    hermite_recursion_residuals,
    laguerre_generalized_rodrigues,
    laguerre_series,
    ladder_operator_residuals,
    ode_residual,
    recursion_residuals,
)
from spectral.riccati import AnsatzKind, PolePolySuperpotential, RiccatiProblem, solve_periodic

logger = logging.getLogger(__name__)

CheckOutcome = tuple[bool, str]

# Sample specs share c = 1 so grids and domains can be reused.
GAP_SUM = Fraction(4)


@dataclass(frozen=True)
class VerificationCheck:
    name: str
    suite: str
    func: Callable[[], CheckOutcome]
    family: str = ''
    alpha: Fraction | None = None


@dataclass(frozen=True)
class CheckResult:
    name: str
    suite: str
    passed: bool
    detail: str = ''
    family: str = ''
    alpha: Fraction | None = None

    def to_record(self) -> CheckRecord:
        record = CheckRecord(
            name=self.name, suite=self.suite, passed=self.passed, detail=self.detail
        )
        if self.alpha is not None:
            record['alpha'] = str(self.alpha)
        return record


def alpha_samples(count: int) -> list[Fraction]:
    """0, +-1/4, +-1/3, +-1/5, +-2/5, ... truncated to count values."""
    out = [Fraction(0)]
    denominators: Iterator[int] = iter([4, 3, *range(5, 10_000)])
    while len(out) < count:
        q = next(denominators)
        for p in range(1, q):
            a = Fraction(p, q)
            if a >= Fraction(1, 2) or a.denominator != q:
                continue
            for value in (a, -a):
                if value not in out:
                    out.append(value)
    return out[:count]


def gamma_samples(alphas: list[Fraction]) -> list[Fraction]:
    """Laguerre parameters reached by the eigenstates, plus a few fixed ones."""
    values = {Fraction(1, 2), Fraction(-1, 2), Fraction(0), Fraction(1), Fraction(3, 2)}
    for a in alphas:
        values.update({a - Fraction(1, 2), Fraction(1, 2) - a, Fraction(1, 2) + a})
    return sorted(values)


def _zero_residuals(residuals: dict[str, PolyQ], where: str) -> CheckOutcome:
    bad = [k for k, r in residuals.items() if not r.is_zero]
    if bad:
        return False, f'{where}: nonzero residuals {bad}'
    return True, ''


# Exact suite


def _check_riccati_symbolic(spec: HierarchySpec) -> CheckOutcome:
    residual = symbolic_riccati_residual(spec)
    if any(residual):
        return False, f'residual Laurent terms {residual}'
    return True, f'N={spec.period} closure exact'


def _check_closed_forms(spec: HierarchySpec, nmax: int) -> CheckOutcome:
    for lam in (1, 2):
        for n in range(nmax + 1):
            built = build_eigenstate(spec, lam, n)
            closed = eigenstate_closed_form(spec, lam, n).expand()
            if not built.same_function(closed):
                return False, f'psi_{lam},{n} differs from its Laguerre closed form'
    return True, f'lambda=1,2, n<={nmax}'


def _check_ladder_roundtrip(spec: HierarchySpec, nmax: int) -> CheckOutcome:
    for lam in range(1, spec.period + 1):
        upper = spec.level(lam + 1)
        for n in range(nmax + 1):
            psi = build_eigenstate(spec, upper, n)
            raised = apply_ladder(raising(spec, lam), psi)
            there_and_back = apply_ladder(lowering(spec, lam), raised)
            shift = energy_level(spec, upper, n) + (spec.gap_sum if lam == spec.period else 0)
            factor = shift - energy_level(spec, lam, 0)
            if not there_and_back.same_function(psi.rescaled(factor * factor)):
                return False, f'A_{lam} A_{lam}^+ psi_{upper},{n} != (E - E_{lam},0) psi'
            lowered = lowered_eigenstate(spec, lam, n)
            if not lowered.same_function(psi):
                return False, f'lowered psi_{lam},{n + 1} != psi_{upper},{n}'
    return True, f'n<={nmax}'


def _check_schrodinger(spec: HierarchySpec, nmax: int) -> CheckOutcome:
    for lam in range(1, spec.period + 1):
        for n in range(nmax + 1):
            state = build_eigenstate(spec, lam, n)
            if not schrodinger_residual(spec, lam, state, energy_level(spec, lam, n)).is_zero:
                return False, f'(H_{lam} - E_{lam},{n}) psi_{lam},{n} != 0'
    return True, f'n<={nmax}'


def _check_rodrigues(gammas: list[Fraction], pmax: int) -> CheckOutcome:
    for g in gammas:
        for p in range(pmax + 1):
            series = laguerre_series(g, p)
            for sign in Sign:
                if laguerre_generalized_rodrigues(g, p, sign) != series:
                    return False, f'Rodrigues({sign.value}) != series at gamma={g}, p={p}'
            if not ode_residual(LaguerreOde(g, p), series).is_zero:
                return False, f'Laguerre equation fails at gamma={g}, p={p}'
    return True, f'{len(gammas)} gammas, p<={pmax}'


def _check_recursions(gammas: list[Fraction], pmax: int) -> CheckOutcome:
    checked = 0
    for g in gammas:
        for p in range(pmax + 1):
            if p + g == 0:
                continue
            for table in (recursion_residuals(g, p), ladder_operator_residuals(g, p)):
                ok, detail = _zero_residuals(table, f'gamma={g}, p={p}')
                if not ok:
                    return ok, detail
            checked += 1
    return True, f'{checked} (gamma, p) pairs'


def _check_hermite(nmax: int) -> CheckOutcome:
    for n in range(nmax + 1):
        reference = hermite(n, 'three_term')
        for route in HERMITE_ROUTES:
            if hermite(n, route) != reference:
                return False, f'route {route} disagrees at n={n}'
        if hermite_from_laguerre(n) != reference:
            return False, f'Hermite-Laguerre identity fails at n={n}'
        if not ode_residual(HermiteOde(n), reference).is_zero:
            return False, f'Hermite equation fails at n={n}'
        if n >= 1:
            ok, detail = _zero_residuals(hermite_recursion_residuals(n), f'n={n}')
            if not ok:
                return ok, detail
    return True, f'n<={nmax}'


# Numeric suite


def _check_gram(spec: HierarchySpec, count: int, tol: float) -> CheckOutcome:
    worst = 0.0
    for lam in range(1, spec.period + 1):
        states = [build_eigenstate(spec, lam, n) for n in range(count)]
        gram = gram_matrix(states, spec)
        worst = max(worst, float(np.max(np.abs(gram - np.eye(count)))))
    return worst <= tol, f'max |G - I| = {worst:.2e}'


def _check_fd_spectrum(spec: HierarchySpec, grid: Grid, count: int, tol: float) -> CheckOutcome:
    hierarchy = build_hierarchy(spec)
    floor = float(min(spec.gaps))
    worst = 0.0
    for lam in range(1, spec.period + 1):
        exact = np.array([float(energy_level(spec, lam, n)) for n in range(count)])
        computed = fd_spectrum(hierarchy.potentials[lam - 1], spec, grid, count)
        rel = np.abs(computed - exact) / np.maximum(np.abs(exact), floor)
        worst = max(worst, float(np.max(rel)))
    return worst <= tol, f'max relative error {worst:.2e} ({grid.points} points)'


def _check_richardson(spec: HierarchySpec, grid: Grid) -> CheckOutcome:
    orders = [
        richardson_order(potential, spec, grid, level_index=2)
        for potential in build_hierarchy(spec).potentials
    ]
    detail = ', '.join(f'V_{lam}: {order:.3f}' for lam, order in enumerate(orders, 1))
    return all(1.8 <= order <= 2.2 for order in orders), f'observed order {detail}'


def _check_intertwine(spec: HierarchySpec, grid: Grid, tol: float, perturb: float) -> CheckOutcome:
    worst = 0.0
    for lam in range(1, spec.period + 1):
        upper = spec.level(lam + 1)
        probes = [build_eigenstate(spec, upper, n) for n in range(4)]
        worst = max(worst, intertwine_residual(spec, lam, probes, grid, perturb_gap=perturb))
    detail = f'residual {worst:.2e}' + (f' with gap perturbed by {perturb}' if perturb else '')
    return worst <= tol, detail


def _check_nodes(spec: HierarchySpec, pmax: int) -> CheckOutcome:
    half = math.sqrt(400.0 / float(spec.linear_coeff))
    domain = (float(spec.center) - half, float(spec.center) + half)
    for lam in range(1, spec.period + 1):
        for n in range(2 * pmax + 2):
            state = build_eigenstate(spec, lam, n)
            report = count_nodes(state, spec, domain)
            expected = expected_node_count(state, n)
            if report.zero_count != expected:
                return False, f'psi_{lam},{n}: {report.zero_count} zeros, expected {expected}'
    return True, f'p<={pmax}'


def _check_degenerate_limit(count: int, tol: float) -> CheckOutcome:
    paired = HierarchySpec.from_alpha(0, gap_sum=GAP_SUM)
    single = HierarchySpec((GAP_SUM / 2,))
    u = np.linspace(-4.0, 4.0, 50)
    worst = 0.0
    for n in range(count):
        a = wavefunction_eval(build_eigenstate(paired, 1, n), paired, u)
        b = wavefunction_eval(build_eigenstate(single, 1, n), single, u)
        worst = max(worst, float(np.max(np.abs(np.asarray(a) - np.asarray(b)))))
    return worst <= tol, f'max pointwise difference {worst:.2e}'


def _check_hermite_orthogonality(nmax: int, tol: float) -> CheckOutcome:
    polys = [hermite(n) for n in range(nmax + 1)]
    worst = 0.0
    for n, hn in enumerate(polys):
        for m, hm in enumerate(polys):
            norm = 2.0**n * math.factorial(n) * math.sqrt(math.pi) if n == m else 0.0
            scale = 2.0**n * math.factorial(n) * math.sqrt(math.pi)
            value = hermite_weighted_product(hn, hm, nodes=nmax + 10)
            worst = max(worst, abs(value - norm) / scale)
    return worst <= tol, f'max relative deviation {worst:.2e}'


def _check_riccati_solver(spec: HierarchySpec, tol: float, coeff_tol: float) -> CheckOutcome:
    problem = RiccatiProblem(
        gaps=tuple(float(g) for g in spec.gaps), ansatz=AnsatzKind.POLE_POLY, tol=tol
    )
    solution = solve_periodic(problem)
    if not solution.converged:
        return False, solution.message
    exact_ws = build_hierarchy(spec).superpotentials
    for lam, (w, exact) in enumerate(zip(solution.superpotentials, exact_ws, strict=True), 1):
        assert isinstance(w, PolePolySuperpotential)
        linear, pole = float(exact.linear_coeff), float(exact.pole_coeff)
        if abs(w.linear_coeff - linear) > coeff_tol or abs(w.pole_coeff - pole) > coeff_tol:
            return False, (
                f'W_{lam}: ({w.linear_coeff:.8g}, {w.pole_coeff:.8g}) != ({linear}, {pole})'
            )
    return True, f'certified residual {solution.residual_norm:.2e}'


def _check_equal_gap_solver(gaps: tuple[float, ...], tol: float) -> CheckOutcome:
    """Equal gaps close on the harmonic superpotential: no poles, slope gap/2."""
    solution = solve_periodic(RiccatiProblem(gaps=gaps, ansatz=AnsatzKind.POLE_POLY, tol=tol))
    if not solution.converged:
        return False, solution.message
    slope = gaps[0] / 2
    for lam, w in enumerate(solution.superpotentials, 1):
        assert isinstance(w, PolePolySuperpotential)
        if abs(w.pole_coeff) > tol or abs(w.linear_coeff - slope) > tol:
            return False, f'W_{lam}: ({w.linear_coeff:.8g}, {w.pole_coeff:.3e}) != ({slope}, 0)'
    return True, f'certified residual {solution.residual_norm:.2e}'


def build_checks(config: JobConfig) -> list[VerificationCheck]:
    """All checks for one run; names are unique and carry the sampled alpha."""
    alphas = alpha_samples(config.verify.alpha_sweep)
    gammas = gamma_samples(alphas)
    bounds, tol = config.bounds, config.tolerances
    harmonic = HierarchySpec((GAP_SUM / 2,))
    # Every sampled spec is centered at 0, so one set of grids serves them all.
    fd_grid = GridFactory.create(config.grid, harmonic, 'fd')
    richardson_grid = GridFactory.create(config.grid, harmonic, 'richardson')
    check_grid = GridFactory.create(config.grid, harmonic, 'check')
    levels = max(bounds.levels, 1)
    pmax_nodes = min(bounds.pmax, 4)

    checks = [
        VerificationCheck(
            'exact.riccati_symbolic[N=1]', 'exact', lambda: _check_riccati_symbolic(harmonic)
        ),
        VerificationCheck(
            'exact.rodrigues', 'exact', lambda: _check_rodrigues(gammas, bounds.pmax)
        ),
        VerificationCheck(
            'exact.recursions', 'exact', lambda: _check_recursions(gammas, bounds.pmax)
        ),
        VerificationCheck('exact.hermite', 'exact', lambda: _check_hermite(bounds.nmax)),
        VerificationCheck(
            'exact.schrodinger[N=1]', 'exact', lambda: _check_schrodinger(harmonic, bounds.nmax)
        ),
        VerificationCheck(
            'numeric.gram[N=1]', 'numeric', lambda: _check_gram(harmonic, levels, tol.quadrature)
        ),
        VerificationCheck(
            'numeric.fd_spectrum[N=1]',
            'numeric',
            lambda: _check_fd_spectrum(harmonic, fd_grid, 6, tol.fd_harmonic_relative),
        ),
        VerificationCheck(
            'numeric.richardson[N=1]',
            'numeric',
            lambda: _check_richardson(harmonic, richardson_grid),
        ),
        VerificationCheck(
            'numeric.hermite_orthogonality',
            'numeric',
            lambda: _check_hermite_orthogonality(min(bounds.nmax, 12), 1e-10),
        ),
        VerificationCheck(
            'numeric.degenerate_limit', 'numeric', lambda: _check_degenerate_limit(levels, 1e-12)
        ),
        VerificationCheck(
            'numeric.riccati_solver[N=1]',
            'numeric',
            lambda: _check_riccati_solver(harmonic, tol.riccati, tol.coefficient),
        ),
        VerificationCheck(
            'numeric.riccati_solver[N=2]',
            'numeric',
            lambda: _check_riccati_solver(HierarchySpec((1, 3)), tol.riccati, tol.coefficient),
        ),
        VerificationCheck(
            'numeric.riccati_solver[N=3 equal]',
            'numeric',
            lambda: _check_equal_gap_solver((1.0, 1.0, 1.0), tol.riccati),
        ),
    ]

    for alpha in alphas:
        spec = HierarchySpec.from_alpha(alpha, gap_sum=GAP_SUM)
        tag = f'[alpha={alpha}]'
        per_alpha: list[tuple[str, str, Callable[[], CheckOutcome]]] = [
            ('exact.riccati_symbolic', 'exact', lambda s=spec: _check_riccati_symbolic(s)),
            ('exact.closed_form', 'exact', lambda s=spec: _check_closed_forms(s, bounds.nmax)),
            (
                'exact.ladder_roundtrip',
                'exact',
                lambda s=spec: _check_ladder_roundtrip(s, min(bounds.nmax, 8)),
            ),
            ('exact.schrodinger', 'exact', lambda s=spec: _check_schrodinger(s, bounds.nmax)),
            ('numeric.gram', 'numeric', lambda s=spec: _check_gram(s, levels, tol.quadrature)),
            ('numeric.nodes', 'numeric', lambda s=spec: _check_nodes(s, pmax_nodes)),
            (
                'numeric.intertwine',
                'numeric',
                lambda s=spec: _check_intertwine(
                    s, check_grid, tol.intertwine, config.verify.perturb_gap
                ),
            ),
        ]
        checks.extend(
            VerificationCheck(family + tag, suite, func, family=family, alpha=alpha)
            for family, suite, func in per_alpha
        )

    # Singular reference pair, gaps (1, 2)
    pair = HierarchySpec((1, 2))
    checks.extend(
        [
            VerificationCheck(
                'numeric.fd_spectrum[N=2]',
                'numeric',
                lambda: _check_fd_spectrum(pair, fd_grid, 6, tol.fd_relative),
            ),
            VerificationCheck(
                'numeric.richardson[N=2]',
                'numeric',
                lambda: _check_richardson(pair, richardson_grid),
            ),
        ]
    )
    return checks


class VerificationService:
    """Runs verification checks concurrently, bounded by a semaphore."""

    def __init__(self, concurrency: int | None = None):
        limit = concurrency or int(os.getenv('VERIFY_CONCURRENCY', 4))
        self._semaphore = asyncio.Semaphore(limit)
        self._limit = limit

    async def _run_check(self, check: VerificationCheck) -> CheckResult:
        async with self._semaphore:
            try:
                passed, detail = await asyncio.to_thread(check.func)
            except Exception as e:
                # A crashing check is a failed check; the others keep running.
                logger.error(f'Check {check.name} raised {type(e).__name__}: {e}')
                passed, detail = False, f'{type(e).__name__}: {e}'
        if passed:
            logger.info(f'PASS {check.name} {detail}')
        else:
            logger.warning(f'FAIL {check.name} {detail}')
        return CheckResult(check.name, check.suite, bool(passed), detail, check.family, check.alpha)

    async def run(self, checks: list[VerificationCheck]) -> list[CheckResult]:
        """Run every check; results come back sorted by name."""
        names = [c.name for c in checks]
        if len(set(names)) != len(names):
            raise ValueError('Check names must be unique')
        logger.info(f'Running {len(checks)} checks with concurrency {self._limit}')
        results = await asyncio.gather(*(self._run_check(c) for c in checks))
        return sorted(results, key=lambda r: r.name)


def build_report(results: list[CheckResult]) -> VerificationReport:
    matrix: dict[str, dict[str, bool]] = {}
    for r in results:
        if r.alpha is not None:
            row = matrix.setdefault(str(r.alpha), {})
            row[r.family] = r.passed
    failures = sum(1 for r in results if not r.passed)
    return VerificationReport(
        schema=1,
        passed=failures == 0,
        total=len(results),
        failures=failures,
        checks=[r.to_record() for r in results],
        alpha_matrix=matrix,
    )
