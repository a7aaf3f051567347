"""Closed-form periodic hierarchies of period 1 and 2.

A hierarchy is fixed by its gaps. For period N the chain of partner
Hamiltonians H_1, H_2, ... closes after N steps, and every spectrum repeats the
same N gaps. For N = 1 this is the harmonic oscillator; for N = 2 the two
superpotentials carry a 1/(u - u0) pole whose strength is the gap asymmetry

    alpha = (gap_2 - gap_1) / (2 (gap_1 + gap_2)),   -1/2 < alpha < 1/2.

Eigenstates are kept exactly as quasi-polynomials. With
c = (gap_1 + gap_2) / 4 and v = c (u - u0)^2, a period-2 state is

    N0 * sqrt(norm2 / Gamma(gamma_base)) * v^sigma * e^{-v/2} * P(v)

on u > u0, and the same times the parity sign on u < u0. Period-1 states
use v = sqrt(gap/2) (u - u0) and the Gaussian weight e^{-v^2/2}.
Units are those with hbar^2 / 2m = 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from spectral.errors import FormMismatch, NegativePowerError, SingularPoint, UnsupportedPeriod
from spectral.exactnum import (
    PolyQ,
    RationalLike,
    as_rational,
    gamma_float,
    gamma_shift_ratio,
)
from spectral.polyfactory import FirstOrderFactor, QuasiOperand, laguerre_series

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class StateForm(str, Enum):
    GAUSSIAN_U = 'gaussian_u'
    LAGUERRE_V = 'laguerre_v'


class Parity(str, Enum):
    EVEN = 'even'
    ODD = 'odd'

    def flipped(self) -> Parity:
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN

    @classmethod
    def of(cls, n: int) -> Parity:
        return cls.ODD if n % 2 else cls.EVEN


class Direction(str, Enum):
    RAISE = 'raise'
    LOWER = 'lower'


@dataclass(frozen=True)
class HierarchySpec:
    """Prescribed gaps, ground energy E_{1,0} and center u0."""

    gaps: tuple[Fraction, ...]
    ground_energy: Fraction = Fraction(0)
    center: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        gaps = tuple(as_rational(g) for g in self.gaps)
        if not gaps:
            raise ValueError('At least one gap is required')
        for k, g in enumerate(gaps, start=1):
            if g <= 0:
                raise ValueError(f'Gap {k} must be strictly positive, got {g}')
        object.__setattr__(self, 'gaps', gaps)
        object.__setattr__(self, 'ground_energy', as_rational(self.ground_energy))
        object.__setattr__(self, 'center', as_rational(self.center))

    @classmethod
    def from_alpha(
        cls,
        alpha: RationalLike,
        gap_sum: RationalLike = 4,
        ground_energy: RationalLike = 0,
        center: RationalLike = 0,
    ) -> HierarchySpec:
        """Period-2 spec with the given asymmetry and gap_1 + gap_2 = gap_sum."""
        alpha, total = as_rational(alpha), as_rational(gap_sum)
        if not -HALF < alpha < HALF:
            raise ValueError(f'alpha must lie in (-1/2, 1/2), got {alpha}')
        return cls(
            (total * (HALF - alpha), total * (HALF + alpha)),
            ground_energy=as_rational(ground_energy),
            center=as_rational(center),
        )

    @property
    def period(self) -> int:
        return len(self.gaps)

    @property
    def gap_sum(self) -> Fraction:
        return sum(self.gaps, Fraction(0))

    @property
    def is_closed_form(self) -> bool:
        return self.period in (1, 2)

    @property
    def form(self) -> StateForm:
        self._require_closed_form()
        return StateForm.GAUSSIAN_U if self.period == 1 else StateForm.LAGUERRE_V

    @property
    def alpha(self) -> Fraction:
        match self.period:
            case 1:
                return Fraction(0)
            case 2:
                d1, d2 = self.gaps
                return (d2 - d1) / (2 * (d1 + d2))
            case _:
                raise UnsupportedPeriod(
                    f'alpha is only defined for periods 1 and 2, got N={self.period}'
                )

    @property
    def linear_coeff(self) -> Fraction:
        """Coefficient of (u - u0) shared by every superpotential."""
        self._require_closed_form()
        return self.gap_sum / (2 * self.period)

    def level(self, lam: int) -> int:
        """Reduce a hierarchy level into 1..N."""
        return (lam - 1) % self.period + 1

    def check_level(self, lam: int) -> None:
        if not 1 <= lam <= self.period:
            raise ValueError(f'Level must lie in 1..{self.period}, got {lam}')

    def gap(self, lam: int, k: int) -> Fraction:
        """Delta_{lam,k} = E_{lam,k} - E_{lam,k-1} for k >= 1."""
        return self.gaps[(lam + k - 2) % self.period]

    def with_gap(self, lam: int, gap: RationalLike) -> HierarchySpec:
        gaps = list(self.gaps)
        gaps[self.level(lam) - 1] = as_rational(gap)
        return replace(self, gaps=tuple(gaps))

    def rotated(self, shift: int = 1) -> HierarchySpec:
        k = shift % self.period
        return replace(self, gaps=self.gaps[k:] + self.gaps[:k])

    def _require_closed_form(self) -> None:
        if not self.is_closed_form:
            raise UnsupportedPeriod(
                f'Closed forms exist for periods 1 and 2 only, got N={self.period}; '
                'use the numerical Riccati solver'
            )


@dataclass(frozen=True)
class Superpotential:
    """W(u) = linear_coeff * (u - u0) + pole_coeff / (u - u0)."""

    linear_coeff: Fraction
    pole_coeff: Fraction
    center: Fraction = Fraction(0)

    def value(self, u: np.ndarray | float) -> np.ndarray:
        x = np.asarray(u, dtype=float) - float(self.center)
        if not self.pole_coeff:
            return float(self.linear_coeff) * x
        with np.errstate(divide='ignore'):
            return float(self.linear_coeff) * x + float(self.pole_coeff) / x

    def derivative(self, u: np.ndarray | float) -> np.ndarray:
        x = np.asarray(u, dtype=float) - float(self.center)
        if not self.pole_coeff:
            return np.full_like(x, float(self.linear_coeff))
        with np.errstate(divide='ignore', invalid='ignore'):
            return float(self.linear_coeff) - float(self.pole_coeff) / x**2

    def laurent_terms(self, derivative_sign: int) -> dict[int, Fraction]:
        """Coefficients of W^2 + derivative_sign * W' keyed by power of (u - u0)."""
        c, a = self.linear_coeff, self.pole_coeff
        return {2: c * c, 0: 2 * c * a + derivative_sign * c, -2: a * a - derivative_sign * a}


@dataclass(frozen=True)
class PotentialForm:
    """V(u) = quad * (u-u0)^2 + invsq / (u-u0)^2 + const."""

    quad_coeff: Fraction
    invsq_coeff: Fraction
    const_term: Fraction
    center: Fraction = Fraction(0)

    def value(self, u: np.ndarray | float) -> np.ndarray:
        x = np.asarray(u, dtype=float) - float(self.center)
        out = float(self.quad_coeff) * x**2 + float(self.const_term)
        if self.invsq_coeff:
            with np.errstate(divide='ignore'):
                out = out + float(self.invsq_coeff) / x**2
        return out

    @property
    def is_singular(self) -> bool:
        return self.invsq_coeff != 0

    @property
    def bounded_below(self) -> bool:
        return self.invsq_coeff >= 0

    def frobenius_exponents(self) -> tuple[Fraction | float, Fraction | float]:
        """Exponents s with s(s-1) = invsq, smaller first.

        Solutions near the center behave as |u - u0|^s. The discriminant is a
        perfect square for every hierarchy potential, so the result stays exact.
        """
        disc = Fraction(1, 4) + self.invsq_coeff
        if disc < 0:
            raise ValueError(f'Inverse-square coefficient {self.invsq_coeff} is below -1/4')
        root = _exact_sqrt(disc)
        return HALF - root, HALF + root


def _exact_sqrt(q: Fraction) -> Fraction | float:
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return math.sqrt(q)


class Hierarchy(NamedTuple):
    superpotentials: tuple[Superpotential, ...]
    potentials: tuple[PotentialForm, ...]


def energy_level(spec: HierarchySpec, lam: int, n: int) -> Fraction:
    """E_{lam,n} = E_{1, n + lam - 1}."""
    spec.check_level(lam)
    if n < 0:
        raise ValueError(f'Excitation number must be nonnegative, got {n}')
    full, rest = divmod(lam - 1 + n, spec.period)
    return spec.ground_energy + full * spec.gap_sum + sum(spec.gaps[:rest], Fraction(0))


@dataclass(frozen=True)
class SpectrumTable:
    level: int
    entries: tuple[tuple[int, Fraction], ...]

    @property
    def energies(self) -> tuple[Fraction, ...]:
        return tuple(e for _, e in self.entries)


def spectrum_table(spec: HierarchySpec, lam: int, count: int) -> SpectrumTable:
    entries = tuple((n, energy_level(spec, lam, n)) for n in range(count))
    energies = [e for _, e in entries]
    if any(b <= a for a, b in zip(energies, energies[1:], strict=False)):
        raise AssertionError(f'Spectrum of level {lam} is not strictly increasing')
    n_per = spec.period
    for n in range(count - n_per):
        if energies[n + n_per] - energies[n] != spec.gap_sum:
            raise AssertionError(f'Gap periodicity broken at level {lam}, n={n}')
    return SpectrumTable(level=lam, entries=entries)


def build_hierarchy(spec: HierarchySpec) -> Hierarchy:
    """Superpotentials and potentials of levels 1..N."""
    spec._require_closed_form()
    c = spec.linear_coeff
    match spec.period:
        case 1:
            poles = (Fraction(0),)
        case _:
            alpha = spec.alpha
            poles = (-alpha, alpha)

    ws = tuple(Superpotential(c, a, spec.center) for a in poles)
    vs = tuple(
        PotentialForm(
            quad_coeff=c * c,
            invsq_coeff=a * (a + 1),
            const_term=2 * c * a - c + energy_level(spec, lam, 0),
            center=spec.center,
        )
        for lam, a in enumerate(poles, start=1)
    )
    residual = symbolic_riccati_residual(spec, ws)
    if any(residual):
        raise AssertionError(f'Closed-form superpotentials violate the Riccati closure: {residual}')
    logger.debug(f'Built hierarchy N={spec.period}, alpha={spec.alpha}, c={c}')
    return Hierarchy(ws, vs)


def potential_for_level(spec: HierarchySpec, hierarchy: Hierarchy, lam: int) -> PotentialForm:
    """V_lam for any lam >= 1; levels past N repeat shifted by the gap sum."""
    turns, _ = divmod(lam - 1, spec.period)
    base = hierarchy.potentials[spec.level(lam) - 1]
    return replace(base, const_term=base.const_term + turns * spec.gap_sum)


def symbolic_riccati_residual(
    spec: HierarchySpec, superpotentials: tuple[Superpotential, ...] | None = None
) -> list[dict[int, Fraction]]:
    """Laurent coefficients of W_{l+1}^2 - W_{l+1}' + gap_l - W_l^2 - W_l'.

    One dict per level with zero coefficients dropped; all dicts empty means
    the closure holds exactly.
    """
    ws = superpotentials if superpotentials is not None else build_hierarchy(spec).superpotentials
    out = []
    for lam in range(1, spec.period + 1):
        nxt = ws[lam % spec.period].laurent_terms(-1)
        cur = ws[lam - 1].laurent_terms(+1)
        terms = {k: nxt[k] - cur[k] for k in (2, 0, -2)}
        terms[0] += spec.gaps[lam - 1]
        out.append({k: v for k, v in terms.items() if v != 0})
    return out


@dataclass(frozen=True)
class QuasiState:
    """An eigenfunction in quasi-polynomial form; see the module docstring."""

    sigma: Fraction
    poly: PolyQ
    parity: Parity
    norm2: Fraction
    gamma_base: Fraction
    form: StateForm

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    @property
    def center_exponent(self) -> Fraction:
        """Power of |u - u0| governing the behavior at the center."""
        if self.form is StateForm.LAGUERRE_V:
            return 2 * self.sigma
        return Fraction(max(self.poly.valuation, 0))

    def operand(self) -> QuasiOperand:
        return QuasiOperand(self.sigma, self.poly)

    def rescaled(self, factor: RationalLike) -> QuasiState:
        """Multiply the squared normalization by factor."""
        return replace(self, norm2=self.norm2 * as_rational(factor))

    def canonical(self) -> tuple:
        """Representation-independent key: equal keys mean equal functions."""
        if self.is_zero:
            return ('zero', self.form)
        lead = self.poly.leading_coeff
        return (
            self.form,
            self.sigma,
            self.parity,
            self.gamma_base,
            lead > 0,
            self.norm2 * lead * lead,
            self.poly.monic(),
        )

    def same_function(self, other: QuasiState) -> bool:
        return self.canonical() == other.canonical()


@dataclass(frozen=True)
class LadderOp:
    """A_lam (lower) or A_lam^dagger (raise) in the state variable.

    For period 2 the operator is sqrt(scale) * (half_v v^{1/2} + pole v^{-1/2}
    -+ v^{1/2} d/dv), valid on u > u0; the u < u0 copy differs by a sign,
    which is carried by the parity flip. For period 1 it is
    sqrt(scale) * (v -+ d/dv) acting on the Gaussian form.
    """

    direction: Direction
    level: int
    pole: Fraction
    scale: Fraction
    form: StateForm
    half_v: Fraction = HALF

    @classmethod
    def for_level(cls, spec: HierarchySpec, lam: int, direction: Direction) -> LadderOp:
        lam = spec.level(lam)
        match spec.form:
            case StateForm.GAUSSIAN_U:
                return cls(direction, lam, Fraction(0), spec.gaps[0] / 2, StateForm.GAUSSIAN_U)
            case StateForm.LAGUERRE_V:
                pole = (-1) ** lam * spec.alpha / 2
                return cls(direction, lam, pole, spec.gap_sum, StateForm.LAGUERRE_V)

    def factor(self) -> FirstOrderFactor:
        s = Fraction(-1) if self.direction is Direction.RAISE else Fraction(1)
        return FirstOrderFactor(self.half_v, self.pole, s)


def raising(spec: HierarchySpec, lam: int) -> LadderOp:
    return LadderOp.for_level(spec, lam, Direction.RAISE)


def lowering(spec: HierarchySpec, lam: int) -> LadderOp:
    return LadderOp.for_level(spec, lam, Direction.LOWER)


def apply_ladder(op: LadderOp, state: QuasiState) -> QuasiState:
    """Apply a ladder operator exactly; the parity flips and norm2 gains the scale."""
    if op.form is not state.form:
        raise FormMismatch(
            f'{op.direction.value} operator is {op.form.value}, state is {state.form.value}'
        )
    match op.form:
        case StateForm.GAUSSIAN_U:
            p = state.poly
            if op.direction is Direction.RAISE:
                poly = 2 * PolyQ.variable() * p - p.diff()
            else:
                poly = p.diff()
            sigma = state.sigma
        case StateForm.LAGUERRE_V:
            out = op.factor().apply(state.operand()).absorb()
            poly, sigma = out.poly, out.sigma
    return QuasiState(
        sigma=sigma,
        poly=poly,
        parity=state.parity.flipped(),
        norm2=state.norm2 * op.scale,
        gamma_base=state.gamma_base,
        form=state.form,
    )


def _pole(spec: HierarchySpec, lam: int) -> Fraction:
    return (-1) ** spec.level(lam) * spec.alpha


def ground_state(spec: HierarchySpec, lam: int) -> QuasiState:
    spec.check_level(lam)
    if spec.form is StateForm.GAUSSIAN_U:
        return QuasiState(
            Fraction(0), PolyQ.one(), Parity.EVEN, Fraction(1), HALF, StateForm.GAUSSIAN_U
        )
    a = _pole(spec, lam)
    return QuasiState(-a / 2, PolyQ.one(), Parity.EVEN, Fraction(1), HALF - a, StateForm.LAGUERRE_V)


def normalization_denominator(spec: HierarchySpec, lam: int, n: int) -> Fraction:
    """prod_{k<n} (E_{lam,n} - E_{lam,k}); equals n! gap^n for period 1."""
    top = energy_level(spec, lam, n)
    out = Fraction(1)
    for k in range(n):
        out *= top - energy_level(spec, lam, k)
    return out


def _allowed_sigmas(spec: HierarchySpec) -> set[Fraction]:
    alpha = spec.alpha
    return {alpha / 2, -alpha / 2, (1 - alpha) / 2, (1 + alpha) / 2}


def build_eigenstate(spec: HierarchySpec, lam: int, n: int) -> QuasiState:
    """psi_{lam,n} = A_lam^+ A_{lam+1}^+ ... A_{lam+n-1}^+ psi_{lam+n,0}, normalized."""
    spec.check_level(lam)
    if n < 0:
        raise ValueError(f'Excitation number must be nonnegative, got {n}')
    state = ground_state(spec, spec.level(lam + n))
    for k in reversed(range(n)):
        state = apply_ladder(raising(spec, lam + k), state)
    if spec.form is StateForm.LAGUERRE_V:
        if state.sigma not in _allowed_sigmas(spec) or state.poly.degree != n // 2:
            raise NegativePowerError(
                f'psi_{lam},{n} left the quasi-polynomial class: sigma={state.sigma}, '
                f'degree={state.poly.degree}'
            )
    return state.rescaled(1 / normalization_denominator(spec, lam, n))


def lowered_eigenstate(spec: HierarchySpec, lam: int, n: int) -> QuasiState:
    """psi_{lam+1,n} obtained by lowering psi_{lam,n+1} with A_lam."""
    upper = build_eigenstate(spec, lam, n + 1)
    gap = energy_level(spec, lam, n + 1) - energy_level(spec, lam, 0)
    return apply_ladder(lowering(spec, lam), upper).rescaled(1 / gap)


@dataclass(frozen=True)
class ClosedForm:
    """psi = sign * N0 * sqrt(norm2 / Gamma(gamma_base)) * v^sigma e^{-v/2} L^(gamma)_p(v)."""

    sign: int
    p: int
    gamma: Fraction
    sigma: Fraction
    norm2: Fraction
    gamma_base: Fraction
    parity: Parity

    def expand(self) -> QuasiState:
        return QuasiState(
            sigma=self.sigma,
            poly=laguerre_series(self.gamma, self.p) * self.sign,
            parity=self.parity,
            norm2=self.norm2,
            gamma_base=self.gamma_base,
            form=StateForm.LAGUERRE_V,
        )


def eigenstate_closed_form(spec: HierarchySpec, lam: int, n: int) -> ClosedForm:
    if spec.period != 2:
        raise UnsupportedPeriod(f'Laguerre closed forms need period 2, got N={spec.period}')
    spec.check_level(lam)
    if n < 0:
        raise ValueError(f'Excitation number must be nonnegative, got {n}')
    a = -_pole(spec, lam)
    p, odd = divmod(n, 2)
    if odd:
        gamma, sigma, base, shift = HALF - a, (1 - a) / 2, HALF - a, p + 1
    else:
        gamma, sigma, base, shift = -HALF + a, a / 2, HALF + a, p
    return ClosedForm(
        sign=(-1) ** p,
        p=p,
        gamma=gamma,
        sigma=sigma,
        norm2=math.factorial(p) / gamma_shift_ratio(base, shift),
        gamma_base=base,
        parity=Parity.of(n),
    )


def state_scale_factor(spec: HierarchySpec) -> float:
    """Global factor N0 = c^{1/4} with c the superpotential linear coefficient."""
    return float(spec.linear_coeff) ** 0.25


def wavefunction_eval(
    state: QuasiState, spec: HierarchySpec, u: np.ndarray | float
) -> np.ndarray | float:
    scalar = np.ndim(u) == 0
    x = np.asarray(u, dtype=float) - float(spec.center)
    c = float(spec.linear_coeff)
    amp = state_scale_factor(spec) * math.sqrt(float(state.norm2) / gamma_float(state.gamma_base))
    match state.form:
        case StateForm.GAUSSIAN_U:
            v = math.sqrt(c) * x
            values = amp * np.exp(-(v**2) / 2) * state.poly.evaluate(v)
        case StateForm.LAGUERRE_V:
            if state.sigma < 0 and np.any(x == 0):
                raise SingularPoint(
                    f'State diverges at the center u0={spec.center} (sigma={state.sigma})'
                )
            v = c * x**2
            values = amp * np.power(v, float(state.sigma)) * np.exp(-v / 2) * state.poly.evaluate(v)
            if state.parity is Parity.ODD:
                values = np.where(x < 0, -values, values)
    if scalar:
        return float(values)
    return values


def schrodinger_residual(
    spec: HierarchySpec, lam: int, state: QuasiState, energy: RationalLike
) -> PolyQ:
    """Exact residual of (H_lam - energy) on a state, written in the state variable.

    For period 2 the operator is divided by the gap sum:
    -v d^2 - 1/2 d + v/4 + a(a+1)/(4v) + (a - 1/2)/2 with a the pole of W_lam,
    and the eigenvalue is (energy - E_{lam,0}) / gap_sum. For period 1 it is
    the Hermite operator -d^2 + 2v d with eigenvalue 2 (energy - E_{1,0}) / gap.
    """
    energy = as_rational(energy)
    p = state.poly
    d1, d2 = p.diff(), p.diff().diff()
    v = PolyQ.variable()
    shift = energy - energy_level(spec, spec.level(lam), 0)
    match state.form:
        case StateForm.GAUSSIAN_U:
            mu = 2 * shift / spec.gaps[0]
            return -d2 + 2 * v * d1 - mu * p
        case StateForm.LAGUERRE_V:
            a = _pole(spec, lam)
            s = state.sigma
            k = a * (a + 1) / 4
            m = (a - HALF) / 2
            mu = shift / spec.gap_sum
            r = -(v * v * d2) + v * (v - 2 * s - HALF) * d1 + (s + Fraction(1, 4) + m) * v * p
            r = r + (k - s * s + s / 2) * p
            return r - mu * v * p
