"""Exact rational scalars, univariate polynomials and Gamma shift ratios.

Every symbolic computation in the package runs on these types. Coefficients are
``fractions.Fraction`` values and never floats; floating point only appears when
a polynomial is evaluated on a numeric grid.

A polynomial stores its coefficients lowest power first:

    3/2 - v + 1/2 v^2  ->  PolyQ((Fraction(3, 2), Fraction(-1), Fraction(1, 2)))

The zero polynomial is the empty tuple and has degree -1.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import special

from spectral.errors import PoleError

Rational = Fraction

RationalLike = int | str | Fraction

ArithKind = Literal['add', 'sub', 'mul']


def as_rational(value: RationalLike) -> Fraction:
    """Coerce an int, a ``"p/q"`` string or a Fraction to a Fraction.

    Floats are rejected: they would smuggle rounding into exact code.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f'Exact value expected, got {type(value).__name__}: {value!r}')
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f'Not a rational number: {value!r}') from e
    return Fraction(value)


def _trim(coeffs: Iterable[RationalLike]) -> tuple[Fraction, ...]:
    out = [as_rational(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class PolyQ:
    """Univariate polynomial in v with exact rational coefficients."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'coeffs', _trim(self.coeffs))

    # Constructors

    @classmethod
    def zero(cls) -> PolyQ:
        return cls(())

    @classmethod
    def one(cls) -> PolyQ:
        return cls((Fraction(1),))

    @classmethod
    def constant(cls, value: RationalLike) -> PolyQ:
        return cls((as_rational(value),))

    @classmethod
    def monomial(cls, power: int, coeff: RationalLike = 1) -> PolyQ:
        if power < 0:
            raise ValueError(f'Monomial power must be nonnegative, got {power}')
        return cls((Fraction(0),) * power + (as_rational(coeff),))

    @classmethod
    def variable(cls) -> PolyQ:
        return cls.monomial(1)

    # Structure

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading_coeff(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    @property
    def valuation(self) -> int:
        """Power of the lowest nonzero term; -1 for the zero polynomial."""
        for k, c in enumerate(self.coeffs):
            if c != 0:
                return k
        return -1

    def coeff(self, power: int) -> Fraction:
        if 0 <= power < len(self.coeffs):
            return self.coeffs[power]
        return Fraction(0)

    # Arithmetic

    def __add__(self, other: PolyQ | RationalLike) -> PolyQ:
        other = _lift(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return PolyQ(tuple(self.coeff(k) + other.coeff(k) for k in range(n)))

    __radd__ = __add__

    def __neg__(self) -> PolyQ:
        return PolyQ(tuple(-c for c in self.coeffs))

    def __sub__(self, other: PolyQ | RationalLike) -> PolyQ:
        return self + (-_lift(other))

    def __rsub__(self, other: PolyQ | RationalLike) -> PolyQ:
        return _lift(other) - self

    def __mul__(self, other: PolyQ | RationalLike) -> PolyQ:
        if not isinstance(other, PolyQ):
            c = as_rational(other)
            return PolyQ(tuple(c * a for a in self.coeffs))
        if self.is_zero or other.is_zero:
            return PolyQ.zero()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolyQ(tuple(out))

    __rmul__ = __mul__

    def __truediv__(self, other: RationalLike) -> PolyQ:
        c = as_rational(other)
        return PolyQ(tuple(a / c for a in self.coeffs))

    def __call__(self, x: RationalLike) -> Fraction:
        return poly_eval(self, as_rational(x))

    def diff(self) -> PolyQ:
        return PolyQ(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def shift_up(self, k: int = 1) -> PolyQ:
        """Multiply by v**k."""
        if self.is_zero:
            return self
        return PolyQ((Fraction(0),) * k + self.coeffs)

    def shift_down(self, k: int = 1) -> PolyQ:
        """Divide by v**k; the low coefficients must vanish."""
        if any(c != 0 for c in self.coeffs[:k]):
            raise ArithmeticError(f'{self} is not divisible by v^{k}')
        return PolyQ(self.coeffs[k:])

    def substitute_square(self) -> PolyQ:
        """Return P(v**2)."""
        out: list[Fraction] = []
        for c in self.coeffs:
            out.extend((c, Fraction(0)))
        return PolyQ(tuple(out))

    def monic(self) -> PolyQ:
        if self.is_zero:
            return self
        return self / self.leading_coeff

    # Numeric boundary

    def to_float_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs] or [0.0])

    def evaluate(self, x: np.ndarray | float) -> np.ndarray:
        """Float evaluation on arrays, lowest-power-first coefficient order."""
        return npoly.polyval(np.asarray(x, dtype=float), self.to_float_coeffs())

    def __str__(self) -> str:
        if self.is_zero:
            return '0'
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            match k:
                case 0:
                    terms.append(f'{c}')
                case 1:
                    terms.append(f'{c}*v')
                case _:
                    terms.append(f'{c}*v^{k}')
        return ' + '.join(terms).replace('+ -', '- ')


def _lift(value: PolyQ | RationalLike) -> PolyQ:
    if isinstance(value, PolyQ):
        return value
    return PolyQ.constant(value)


def poly_arith(a: PolyQ, b: PolyQ, kind: ArithKind) -> PolyQ:
    """Exact sum, difference or product of two polynomials."""
    match kind:
        case 'add':
            return a + b
        case 'sub':
            return a - b
        case 'mul':
            return a * b
        case _:
            raise ValueError(f'Unknown polynomial operation: {kind}')


def poly_diff(p: PolyQ) -> PolyQ:
    return p.diff()


def poly_eval(p: PolyQ, x: Fraction) -> Fraction:
    """Horner evaluation."""
    acc = Fraction(0)
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc


def poly_divmod(a: PolyQ, b: PolyQ) -> tuple[PolyQ, PolyQ]:
    """Euclidean division a = q*b + r with deg r < deg b."""
    if b.is_zero:
        raise ZeroDivisionError('polynomial division by zero')
    rem = list(a.coeffs)
    quot = [Fraction(0)] * max(len(rem) - len(b.coeffs) + 1, 0)
    lead = b.leading_coeff
    for shift in range(len(quot) - 1, -1, -1):
        factor = rem[shift + len(b.coeffs) - 1] / lead
        quot[shift] = factor
        if factor:
            for j, c in enumerate(b.coeffs):
                rem[shift + j] -= factor * c
    return PolyQ(tuple(quot)), PolyQ(tuple(rem))


def poly_substitute_square(p: PolyQ) -> PolyQ:
    return p.substitute_square()


def sturm_sequence(p: PolyQ) -> list[PolyQ]:
    seq = [p, p.diff()]
    while not seq[-1].is_zero:
        _, r = poly_divmod(seq[-2], seq[-1])
        seq.append(-r)
    return seq[:-1]


def _sign_changes(values: Sequence[Fraction]) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:], strict=False) if a != b)


def count_real_roots(p: PolyQ, lo: RationalLike, hi: RationalLike) -> int:
    """Number of distinct real roots of p in the half-open interval (lo, hi]."""
    if p.degree < 1:
        return 0
    lo, hi = as_rational(lo), as_rational(hi)
    if hi <= lo:
        return 0
    seq = sturm_sequence(p)
    return _sign_changes([q(lo) for q in seq]) - _sign_changes([q(hi) for q in seq])


def rising_product(base: RationalLike, k: int) -> Fraction:
    """prod_{j<k} (base + j), with no pole rejection."""
    if k < 0:
        raise ValueError(f'Shift must be nonnegative, got {k}')
    base = as_rational(base)
    out = Fraction(1)
    for j in range(k):
        out *= base + j
    return out


def _is_pole(x: Fraction) -> bool:
    return x.denominator == 1 and x <= 0


def gamma_shift_ratio(base: RationalLike, k: int) -> Fraction:
    """Gamma(base + k) / Gamma(base) as an exact rational."""
    base = as_rational(base)
    for j in range(k):
        if _is_pole(base + j):
            raise PoleError(f'Gamma shift ratio hits a pole at {base + j} (base={base}, k={k})')
    return rising_product(base, k)


@dataclass(frozen=True)
class GammaRatio:
    """Gamma(base + shift) / Gamma(base), kept exact."""

    base: Fraction
    shift: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'base', as_rational(self.base))
        if self.shift < 0:
            raise ValueError(f'Shift must be nonnegative, got {self.shift}')
        # Validates the pole condition eagerly.
        gamma_shift_ratio(self.base, self.shift)

    @property
    def value(self) -> Fraction:
        return gamma_shift_ratio(self.base, self.shift)

    def to_float(self) -> float:
        """Gamma(base + shift) as a float."""
        return float(self.value) * gamma_float(self.base)


def binomial(top: RationalLike, k: int) -> Fraction:
    """Generalized binomial coefficient C(top, k) for integer k >= 0."""
    top = as_rational(top)
    return rising_product(top - k + 1, k) / math.factorial(k)


def gamma_float(x: RationalLike | float) -> float:
    return float(special.gamma(float(x)))


def log_gamma_float(x: RationalLike | float) -> float:
    return float(special.gammaln(float(x)))
