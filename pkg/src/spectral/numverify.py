"""Floating-point checks of the exact hierarchy data.

Quadrature overlaps, finite-difference spectra of the engineered potentials,
intertwining residuals and node counts. Everything here consumes exact objects
from :mod:`spectral.hierarchy` and converts to floats only at evaluation time.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from spectral.errors import ConvergenceError, SchemeMismatch
from spectral.exactnum import PolyQ, count_real_roots, gamma_float
from spectral.hierarchy import (
    HierarchySpec,
    Parity,
    PotentialForm,
    QuasiState,
    StateForm,
    build_hierarchy,
    energy_level,
    potential_for_level,
    wavefunction_eval,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [u_min, u_max]."""

    u_min: float
    u_max: float
    points: int
    excluded_center_halfwidth: float = 0.0

    def __post_init__(self) -> None:
        if not self.u_min < self.u_max:
            raise ValueError(f'Grid needs u_min < u_max, got [{self.u_min}, {self.u_max}]')
        if self.points < 3:
            raise ValueError(f'Grid needs at least 3 points, got {self.points}')
        if self.excluded_center_halfwidth < 0:
            raise ValueError('Excluded center half-width must be nonnegative')

    @classmethod
    def symmetric(
        cls, center: float, half_width: float, points: int, excluded_center_halfwidth: float = 0.0
    ) -> Grid:
        return cls(center - half_width, center + half_width, points, excluded_center_halfwidth)

    @property
    def spacing(self) -> float:
        return (self.u_max - self.u_min) / (self.points - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.points)

    def refined(self, factor: int = 2) -> Grid:
        """Nested grid with spacing divided by factor."""
        return Grid(
            self.u_min,
            self.u_max,
            (self.points - 1) * factor + 1,
            self.excluded_center_halfwidth,
        )

    def check_brackets(self, center: float) -> None:
        if not self.u_min < center < self.u_max:
            raise ValueError(f'Grid [{self.u_min}, {self.u_max}] does not bracket u0={center}')

    def sample(self, center: float, margin: float = 0.0) -> np.ndarray:
        """Nodes outside the excluded band around the center (widened by margin)."""
        u = self.nodes()
        band = self.excluded_center_halfwidth + margin
        if band <= 0:
            return u
        return u[np.abs(u - center) > band]


class QuadratureKind(str, Enum):
    GAUSS_LAGUERRE = 'gauss_laguerre'
    GAUSS_HERMITE = 'gauss_hermite'
    TRAPEZOID_U = 'trapezoid_u'


@dataclass(frozen=True)
class QuadratureScheme:
    kind: QuadratureKind
    nodes: int = 40
    # Expected exponent of the Laguerre weight v^gamma e^{-v}; None accepts any.
    weight_exponent: float | None = None


@lru_cache(maxsize=128)
def gauss_laguerre_rule(n: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int_0^inf v^gamma e^{-v} f(v) dv (Golub-Welsch)."""
    if gamma <= -1:
        raise SchemeMismatch(f'Laguerre weight exponent must exceed -1, got {gamma}')
    k = np.arange(1, n)
    diag = 2.0 * np.arange(n) + gamma + 1.0
    off = np.sqrt(k * (k + gamma))
    try:
        nodes, vecs = linalg.eigh_tridiagonal(diag, off)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f'Gauss-Laguerre eigenproblem failed (n={n}, gamma={gamma})') from e
    weights = gamma_float(gamma + 1.0) * vecs[0, :] ** 2
    return nodes, weights


@lru_cache(maxsize=32)
def gauss_hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for int e^{-v^2} f(v) dv (Golub-Welsch)."""
    off = np.sqrt(np.arange(1, n) / 2.0)
    try:
        nodes, vecs = linalg.eigh_tridiagonal(np.zeros(n), off)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f'Gauss-Hermite eigenproblem failed (n={n})') from e
    return nodes, math.sqrt(math.pi) * vecs[0, :] ** 2


def _amplitude(state: QuasiState) -> float:
    return math.sqrt(float(state.norm2) / gamma_float(state.gamma_base))


def default_scheme(spec: HierarchySpec, *states: QuasiState) -> QuadratureScheme:
    pmax = max((s.poly.degree for s in states), default=0)
    if spec.form is StateForm.GAUSSIAN_U:
        return QuadratureScheme(QuadratureKind.GAUSS_HERMITE, nodes=pmax + 10)
    return QuadratureScheme(QuadratureKind.GAUSS_LAGUERRE, nodes=pmax + 10)


def overlap(
    a: QuasiState,
    b: QuasiState,
    spec: HierarchySpec,
    scheme: QuadratureScheme | None = None,
) -> float:
    """Inner product int du psi_a psi_b over the whole line.

    The two half-lines map onto the same v range; when the parities differ
    their contributions cancel and the result is exactly zero.
    """
    if a.form is not spec.form or b.form is not spec.form:
        raise SchemeMismatch(f'States do not use the {spec.form.value} representation of this spec')
    if a.parity is not b.parity or a.is_zero or b.is_zero:
        return 0.0
    scheme = scheme or default_scheme(spec, a, b)

    match scheme.kind:
        case QuadratureKind.TRAPEZOID_U:
            return _trapezoid_overlap(a, b, spec, scheme.nodes)
        case QuadratureKind.GAUSS_HERMITE:
            if spec.form is not StateForm.GAUSSIAN_U:
                raise SchemeMismatch('Gauss-Hermite quadrature needs Gaussian-form states')
            v, w = gauss_hermite_rule(scheme.nodes)
        case QuadratureKind.GAUSS_LAGUERRE:
            if spec.form is not StateForm.LAGUERRE_V:
                raise SchemeMismatch('Gauss-Laguerre quadrature needs Laguerre-form states')
            # Jacobian du = dv / (2 sqrt(c v)) folded into the weight exponent.
            exponent = a.sigma + b.sigma - Fraction(1, 2)
            if exponent <= -1:
                raise SchemeMismatch(f'Combined weight exponent {exponent} is not integrable')
            if scheme.weight_exponent is not None and not math.isclose(
                scheme.weight_exponent, float(exponent), abs_tol=1e-12
            ):
                raise SchemeMismatch(
                    f'Scheme weight exponent {scheme.weight_exponent} does not match '
                    f'the integrand exponent {exponent}'
                )
            v, w = gauss_laguerre_rule(scheme.nodes, float(exponent))

    # The global factor N0^2 cancels against the Jacobian in both forms.
    integral = float(np.sum(w * a.poly.evaluate(v) * b.poly.evaluate(v)))
    return _amplitude(a) * _amplitude(b) * integral


def _trapezoid_overlap(a: QuasiState, b: QuasiState, spec: HierarchySpec, points: int) -> float:
    c = float(spec.linear_coeff)
    half = math.sqrt(80.0 / c)
    # An even point count keeps the center off the grid.
    n = points + points % 2
    u = float(spec.center) + np.linspace(-half, half, n)
    fa = wavefunction_eval(a, spec, u)
    fb = wavefunction_eval(b, spec, u)
    return float(integrate.trapezoid(fa * fb, u))


def gram_matrix(
    states: Sequence[QuasiState], spec: HierarchySpec, scheme: QuadratureScheme | None = None
) -> np.ndarray:
    n = len(states)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = overlap(states[i], states[j], spec, scheme)
    return out


def hermite_weighted_product(poly_a: PolyQ, poly_b: PolyQ, nodes: int = 40) -> float:
    """int e^{-v^2} P_a(v) P_b(v) dv by Gauss-Hermite quadrature."""
    v, w = gauss_hermite_rule(nodes)
    return float(np.sum(w * poly_a.evaluate(v) * poly_b.evaluate(v)))


def fd_spectrum(
    potential: PotentialForm, spec: HierarchySpec, grid: Grid, count: int
) -> np.ndarray:
    """Lowest `count` eigenvalues of -d^2/du^2 + V with Dirichlet ends.

    Regular potentials use the three-point stencil on the whole grid. For a
    1/(u - u0)^2 term each parity class is solved on the half-line after
    factoring out |u - u0|^s, s being the Frobenius exponent selected by the
    eigenfunctions, which leaves a weighted problem with a smooth solution.
    The grid's excluded band plays no part here: the weight fixes the
    behavior at u0, and the spectrum stays second order in the spacing.
    """
    if count > grid.points // 4:
        raise ValueError(f'count={count} exceeds a quarter of the grid ({grid.points} points)')
    u0 = float(spec.center)
    grid.check_brackets(u0)

    if not potential.is_singular:
        return _full_line_spectrum(potential, grid, count)

    half = min(u0 - grid.u_min, grid.u_max - u0)
    cells = int(round(half / grid.spacing))
    parts = [
        _weighted_half_line_spectrum(potential, float(s), cells, grid.spacing, count)
        for s in potential.frobenius_exponents()
    ]
    merged = np.sort(np.concatenate(parts))
    return merged[:count]


def _solve_tridiagonal(diag: np.ndarray, off: np.ndarray, count: int) -> np.ndarray:
    try:
        return linalg.eigh_tridiagonal(
            diag, off, eigvals_only=True, select='i', select_range=(0, count - 1)
        )
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(f'Tridiagonal eigensolver failed: {e}') from e


def _full_line_spectrum(potential: PotentialForm, grid: Grid, count: int) -> np.ndarray:
    u = grid.nodes()[1:-1]
    h = grid.spacing
    diag = 2.0 / h**2 + potential.value(u)
    off = np.full(len(u) - 1, -1.0 / h**2)
    return _solve_tridiagonal(diag, off, count)


def _weighted_half_line_spectrum(
    potential: PotentialForm, s: float, cells: int, h: float, count: int
) -> np.ndarray:
    """Finite volumes for -x^{-2s} (x^{2s} phi')' + (q x^2 + const) phi on (0, cells*h).

    Zero flux at x = 0, phi = 0 at the ghost node past the right edge. Mass
    and stiffness use exact integrals of the weight x^{2s}.
    """
    beta = 2.0 * s + 1.0
    edges = h * np.arange(cells + 1)
    centers = h * (np.arange(cells + 1) + 0.5)
    mass = (edges[1:] ** beta - edges[:-1] ** beta) / beta
    stiff = (centers[1:] ** beta - centers[:-1] ** beta) / (beta * h**2)
    x = centers[:-1]
    regular = float(potential.quad_coeff) * x**2 + float(potential.const_term)

    left = np.concatenate(([0.0], stiff[:-1]))
    diag = (left + stiff) / mass + regular
    off = -stiff[:-1] / np.sqrt(mass[:-1] * mass[1:])
    return _solve_tridiagonal(diag, off, min(count, cells))


def richardson_order(
    potential: PotentialForm, spec: HierarchySpec, grid: Grid, level_index: int
) -> float:
    """Observed convergence order of one eigenvalue on grids h, h/2, h/4."""
    count = level_index + 1
    e1, e2, e4 = (
        fd_spectrum(potential, spec, g, count)[level_index]
        for g in (grid, grid.refined(2), grid.refined(4))
    )
    coarse, fine = abs(e1 - e2), abs(e2 - e4)
    if fine == 0.0:
        return math.inf
    order = math.log2(coarse / fine)
    logger.debug(f'Richardson: E={e1:.10g}, {e2:.10g}, {e4:.10g}; order {order:.3f}')
    return order


def _stencil_d1(f: Callable[[np.ndarray], np.ndarray], u: np.ndarray, h: float) -> np.ndarray:
    return (f(u - 2 * h) - 8 * f(u - h) + 8 * f(u + h) - f(u + 2 * h)) / (12 * h)


def _stencil_d2(f: Callable[[np.ndarray], np.ndarray], u: np.ndarray, h: float) -> np.ndarray:
    return (-f(u - 2 * h) + 16 * f(u - h) - 30 * f(u) + 16 * f(u + h) - f(u + 2 * h)) / (12 * h**2)


def intertwine_residual(
    spec: HierarchySpec,
    lam: int,
    probes: Sequence[QuasiState],
    grid: Grid,
    perturb_gap: float = 0.0,
    step: float = 1e-3,
) -> float:
    """max |(H_{lam+1} - A_lam A_lam^+ - E_{lam,0}) psi| / max |psi| over probes.

    Derivatives are five-point finite differences of exact state values; the
    product A A^+ is differenced in two nested passes. A nonzero perturb_gap
    shifts gap lam inside A_lam only.
    """
    spec.check_level(lam)
    hierarchy = build_hierarchy(spec)
    a_spec = spec
    if perturb_gap:
        a_spec = spec.with_gap(lam, spec.gaps[lam - 1] + Fraction(perturb_gap))
    w = build_hierarchy(a_spec).superpotentials[lam - 1]
    v_next = potential_for_level(spec, hierarchy, lam + 1)
    e0 = float(energy_level(spec, lam, 0))

    u = grid.sample(float(spec.center), margin=4 * step)
    worst = 0.0
    for probe in probes:

        def psi(x: np.ndarray, probe: QuasiState = probe) -> np.ndarray:
            return wavefunction_eval(probe, spec, x)

        def raised(x: np.ndarray) -> np.ndarray:
            return -_stencil_d1(psi, x, step) + w.value(x) * psi(x)

        values = psi(u)
        lowered_raised = _stencil_d1(raised, u, step) + w.value(u) * raised(u)
        hamiltonian = -_stencil_d2(psi, u, step) + v_next.value(u) * values
        residual = np.max(np.abs(hamiltonian - lowered_raised - e0 * values))
        worst = max(worst, float(residual / np.max(np.abs(values))))
    logger.debug(f'Intertwining residual at level {lam}: {worst:.3e}')
    return worst


class CenterKind(str, Enum):
    VANISHES_POWER = 'vanishes_power'
    FINITE_NONZERO = 'finite_nonzero'
    DIVERGES_POWER = 'diverges_power'


@dataclass(frozen=True)
class CenterBehavior:
    kind: CenterKind
    # psi ~ |u - u0|^exponent near the center
    exponent: Fraction = Fraction(0)


@dataclass(frozen=True)
class NodeReport:
    zero_count: int
    center: CenterBehavior


def count_nodes(state: QuasiState, spec: HierarchySpec, domain: tuple[float, float]) -> NodeReport:
    """Count zeros of a state on domain, which must bracket the center and all roots.

    Polynomial roots are counted exactly with Sturm sequences; a state that
    vanishes like a positive power at the center contributes one more zero.
    """
    lo, hi = domain
    u0 = spec.center
    x_lo, x_hi = Fraction(lo) - u0, Fraction(hi) - u0
    if not x_lo < 0 < x_hi:
        raise ValueError(f'Domain {domain} does not bracket the center u0={u0}')

    match state.form:
        case StateForm.LAGUERRE_V:
            c = spec.linear_coeff
            zeros = count_real_roots(state.poly, 0, c * x_hi**2)
            zeros += count_real_roots(state.poly, 0, c * x_lo**2)
            if state.sigma > 0:
                center = CenterBehavior(CenterKind.VANISHES_POWER, 2 * state.sigma)
                zeros += 1
            elif state.sigma < 0:
                center = CenterBehavior(CenterKind.DIVERGES_POWER, 2 * state.sigma)
            elif state.poly.coeff(0) != 0:
                center = CenterBehavior(CenterKind.FINITE_NONZERO)
            else:
                exponent = Fraction(2 * state.poly.valuation)
                center = CenterBehavior(CenterKind.VANISHES_POWER, exponent)
        case StateForm.GAUSSIAN_U:
            kappa = math.sqrt(float(spec.linear_coeff))
            zeros = count_real_roots(
                state.poly, Fraction(kappa * float(x_lo)), Fraction(kappa * float(x_hi))
            )
            if state.poly.coeff(0) != 0:
                center = CenterBehavior(CenterKind.FINITE_NONZERO)
            else:
                center = CenterBehavior(CenterKind.VANISHES_POWER, state.center_exponent)
    return NodeReport(zero_count=zeros, center=center)


def expected_node_count(state: QuasiState, n: int) -> int:
    """n, or n + 1 for even states whose vanishing at the center is nonanalytic."""
    if state.form is StateForm.LAGUERRE_V and state.parity is Parity.EVEN and state.sigma > 0:
        return n + 1
    return n
