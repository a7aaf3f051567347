"""Hermite and generalized Laguerre polynomials from independent routes.

Three constructions are kept side by side so they can be compared exactly:

* the classical finite series / three-term recursion,
* the generalized Rodrigues formula built from the second-order operators
  D2(+gamma) and D2(-gamma) acting on quasi-polynomials v^s e^{-v/2} P(v),
* the supersymmetric ladder construction (Hermite only here; the Laguerre
  ladder lives in :mod:`spectral.hierarchy`).

Differential equations and recursion relations are checked by returning
residual polynomials, which must be the zero polynomial.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Literal

from spectral.errors import NegativePowerError, PoleError
from spectral.exactnum import PolyQ, RationalLike, as_rational, binomial

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)

HermiteRoute = Literal['ladder', 'three_term', 'rodrigues']
HERMITE_ROUTES: tuple[HermiteRoute, ...] = ('ladder', 'three_term', 'rodrigues')


class Sign(str, Enum):
    PLUS = 'plus'
    MINUS = 'minus'

    @property
    def factor(self) -> int:
        return 1 if self is Sign.PLUS else -1


@dataclass(frozen=True)
class QuasiOperand:
    """The function v^sigma * e^{-v/2} * poly(v)."""

    sigma: Fraction
    poly: PolyQ

    def __post_init__(self) -> None:
        object.__setattr__(self, 'sigma', as_rational(self.sigma))

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def absorb(self) -> QuasiOperand:
        """Move factors of v from the polynomial into the exponent."""
        k = self.poly.valuation
        if k <= 0:
            return self
        return QuasiOperand(self.sigma + k, self.poly.shift_down(k))


@dataclass(frozen=True)
class FirstOrderFactor:
    """The operator a*v^{1/2} + b*v^{-1/2} + s*v^{1/2}*d/dv on quasi-operands.

    Acting on v^sigma e^{-v/2} P it gives v^{sigma-1/2} e^{-v/2} Q with
    Q = (a - s/2) v P + (b + s sigma) P + s v P'.
    """

    a: Fraction
    b: Fraction
    s: Fraction

    def apply(self, x: QuasiOperand) -> QuasiOperand:
        p = x.poly
        q = (self.a - self.s / 2) * p.shift_up() + (self.b + self.s * x.sigma) * p
        q = q + self.s * p.diff().shift_up()
        return QuasiOperand(x.sigma - HALF, q)


@dataclass(frozen=True)
class D2Operator:
    """D2(+gamma) or D2(-gamma): a product of two first-order factors."""

    gamma: Fraction
    sign: Sign = Sign.PLUS

    def __post_init__(self) -> None:
        object.__setattr__(self, 'gamma', as_rational(self.gamma))
        object.__setattr__(self, 'sign', Sign(self.sign))

    @property
    def c(self) -> Fraction:
        return HALF + self.sign.factor * self.gamma

    @property
    def left(self) -> FirstOrderFactor:
        return FirstOrderFactor(HALF, -self.c / 2, Fraction(-1))

    @property
    def right(self) -> FirstOrderFactor:
        return FirstOrderFactor(HALF, self.c / 2, Fraction(-1))

    @property
    def rodrigues_sigma(self) -> Fraction:
        return Fraction(1, 4) + self.gamma / 2

    @classmethod
    def for_alpha(cls, alpha: RationalLike, sign: Sign = Sign.PLUS) -> D2Operator:
        """The ladder-product operator D(alpha) written as a D2 instance.

        D(alpha) = D2(+gamma) with gamma = alpha - 1/2, or D2(-gamma) with
        gamma = 1/2 - alpha. Both expand to the same operator.
        """
        alpha = as_rational(alpha)
        if sign is Sign.PLUS:
            return cls(alpha - HALF, Sign.PLUS)
        return cls(HALF - alpha, Sign.MINUS)


def d2_apply(op: D2Operator, x: QuasiOperand) -> QuasiOperand:
    """Apply D2 once.

    The two factors lower the exponent by one in total. When the result
    carries a factor of v it is folded back so that the exponent is kept;
    on the Rodrigues operand this always happens, and a missing factor there
    raises NegativePowerError.
    """
    y = op.left.apply(op.right.apply(x))
    q = y.poly
    if q.is_zero:
        return QuasiOperand(x.sigma, q)
    if q.coeff(0) == 0:
        return QuasiOperand(x.sigma, q.shift_down())
    if x.sigma == op.rodrigues_sigma:
        raise NegativePowerError(
            f'D2({op.sign.value}, gamma={op.gamma}) left a v^-1 term on the Rodrigues operand'
        )
    return y


def laguerre_series(gamma: RationalLike, p: int) -> PolyQ:
    """L^(gamma)_p(v) = sum_k (-1)^k C(p+gamma, p-k) v^k / k!."""
    if p < 0:
        raise ValueError(f'Laguerre order must be nonnegative, got {p}')
    gamma = as_rational(gamma)
    return PolyQ(
        tuple(
            Fraction((-1) ** k, math.factorial(k)) * binomial(p + gamma, p - k)
            for k in range(p + 1)
        )
    )


def laguerre_generalized_rodrigues(gamma: RationalLike, p: int, sign: Sign = Sign.PLUS) -> PolyQ:
    """L^(gamma)_p from p applications of D2(+-gamma) to v^{1/4+gamma/2} e^{-v/2}."""
    if p < 0:
        raise ValueError(f'Laguerre order must be nonnegative, got {p}')
    op = D2Operator(as_rational(gamma), Sign(sign))
    x = QuasiOperand(op.rodrigues_sigma, PolyQ.one())
    for step in range(p):
        x = d2_apply(op, x)
        if x.sigma != op.rodrigues_sigma or x.poly.degree != step + 1:
            raise NegativePowerError(
                f'D2 step {step + 1} left the Rodrigues class: sigma={x.sigma}, '
                f'degree={x.poly.degree}'
            )
    return x.poly * Fraction((-1) ** p, math.factorial(p))


def hermite(n: int, route: HermiteRoute = 'three_term') -> PolyQ:
    """Physicists' Hermite polynomial H_n(v)."""
    if n < 0:
        raise ValueError(f'Hermite order must be nonnegative, got {n}')
    v = PolyQ.variable()
    match route:
        case 'ladder':
            # e^{v^2/2} (v - d/dv)^n e^{-v^2/2}
            p = PolyQ.one()
            for _ in range(n):
                p = 2 * v * p - p.diff()
            return p
        case 'three_term':
            prev, cur = PolyQ.zero(), PolyQ.one()
            for k in range(n):
                prev, cur = cur, 2 * v * cur - 2 * k * prev
            return cur
        case 'rodrigues':
            # (-1)^n e^{v^2} d^n e^{-v^2}
            q = PolyQ.one()
            for _ in range(n):
                q = q.diff() - 2 * v * q
            return q * (-1) ** n
        case _:
            raise ValueError(f'Unknown Hermite route: {route}')


def hermite_from_laguerre(n: int) -> PolyQ:
    """H_n from the half-integer Laguerre polynomials evaluated at v^2."""
    if n < 0:
        raise ValueError(f'Hermite order must be nonnegative, got {n}')
    p, odd = divmod(n, 2)
    prefactor = (-1) ** p * 2**n * math.factorial(p)
    if odd:
        return prefactor * laguerre_series(HALF, p).substitute_square().shift_up()
    return prefactor * laguerre_series(-HALF, p).substitute_square()


@dataclass(frozen=True)
class LaguerreOde:
    gamma: Fraction
    p: int


@dataclass(frozen=True)
class HermiteOde:
    n: int


def ode_residual(kind: LaguerreOde | HermiteOde, poly: PolyQ) -> PolyQ:
    v = PolyQ.variable()
    d1 = poly.diff()
    d2 = d1.diff()
    match kind:
        case LaguerreOde(gamma=gamma, p=p):
            return v * d2 + (as_rational(gamma) + 1 - v) * d1 + p * poly
        case HermiteOde(n=n):
            return d2 - 2 * v * d1 + 2 * n * poly
        case _:
            raise TypeError(f'Unknown differential equation: {kind!r}')


def _laguerre(gamma: Fraction, p: int) -> PolyQ:
    if p < 0:
        return PolyQ.zero()
    return laguerre_series(gamma, p)


def recursion_residuals(gamma: RationalLike, p: int) -> dict[str, PolyQ]:
    """Residuals of the Laguerre ladder and recursion relations at order p.

    Keys name the relation; every value must be the zero polynomial.
    L_{-1} is taken to be zero.
    """
    if p < 0:
        raise ValueError(f'Laguerre order must be nonnegative, got {p}')
    g = as_rational(gamma)
    if p + g == 0:
        raise PoleError(f'Lowering relation divides by p + gamma = 0 (gamma={g}, p={p})')
    v = PolyQ.variable()
    lp = _laguerre(g, p)
    lp1 = _laguerre(g, p + 1)
    dlp = lp.diff()
    up_prev = _laguerre(g + 1, p - 1)

    res = {
        'lower_gamma': _laguerre(g - 1, p) - (g * lp + v * dlp) / (p + g),
        'raise_gamma_from_next': _laguerre(g + 1, p) + lp1.diff(),
        'raise_gamma': _laguerre(g + 1, p) - (lp - dlp),
        'lower_gamma_next': _laguerre(g - 1, p + 1) + ((v - g) * lp - v * dlp) / (p + 1),
        'three_term_order': lp1 - ((p + 1 + g - v) * lp + v * dlp) / (p + 1),
        'three_term_mixed': lp1 - ((p + 1 + g - v) * lp - v * up_prev) / (p + 1),
        # Reduced with L^(g+1)_{p-1} eliminating the derivative.
        'lower_gamma_reduced': _laguerre(g - 1, p) - (g * lp - v * up_prev) / (p + g),
        'raise_gamma_reduced': _laguerre(g + 1, p) - (lp + up_prev),
        'lower_gamma_next_reduced': _laguerre(g - 1, p + 1)
        + ((v - g) * lp + v * up_prev) / (p + 1),
        'second_order_step': lp1
        - ((g + 1 - v) * lp - (g + 1 - 2 * v) * dlp - v * dlp.diff()) / (p + 1),
    }
    for sign in Sign:
        op = D2Operator(g, sign)
        stepped = d2_apply(op, QuasiOperand(op.rodrigues_sigma, lp))
        res[f'd2_step_{sign.value}'] = lp1 + stepped.poly / (p + 1)
    return res


def ladder_operator_residuals(gamma: RationalLike, p: int) -> dict[str, PolyQ]:
    """The four ladder recursions as first-order factors acting on v^{gamma/2} e^{-v/2} L_p.

    Each factor maps the gamma weight onto the weight of the neighbouring
    parameter, so the output polynomial (times v for the raising forms) is a
    multiple of the neighbouring Laguerre polynomial.
    """
    g = as_rational(gamma)
    if p + g == 0:
        raise PoleError(f'Lowering relation divides by p + gamma = 0 (gamma={g}, p={p})')
    lp = QuasiOperand(g / 2, _laguerre(g, p))
    lp1 = QuasiOperand(g / 2, _laguerre(g, p + 1))

    # (gamma + v d) L_p
    lower = FirstOrderFactor(HALF, g / 2, Fraction(1)).apply(lp)
    # -v d L_{p+1}
    raise_next = FirstOrderFactor(-HALF, g / 2, Fraction(-1)).apply(lp1)
    # v (1 - d) L_p
    raise_same = FirstOrderFactor(HALF, g / 2, Fraction(-1)).apply(lp)
    # (gamma - v + v d) L_p
    lower_next = FirstOrderFactor(-HALF, g / 2, Fraction(1)).apply(lp)

    return {
        'lower_gamma': _laguerre(g - 1, p) * (p + g) - lower.poly,
        'raise_gamma_from_next': _laguerre(g + 1, p).shift_up() - raise_next.poly,
        'raise_gamma': _laguerre(g + 1, p).shift_up() - raise_same.poly,
        'lower_gamma_next': _laguerre(g - 1, p + 1) * (p + 1) - lower_next.poly,
    }


def hermite_recursion_residuals(n: int) -> dict[str, PolyQ]:
    if n < 1:
        raise ValueError(f'Hermite recursions reference n-1, got n={n}')
    v = PolyQ.variable()
    hn, hprev, hnext = hermite(n), hermite(n - 1), hermite(n + 1)
    return {
        'raise': hnext - (2 * v * hn - hn.diff()),
        'lower': hn.diff() - 2 * n * hprev,
        'three_term': hnext - (2 * v * hn - 2 * n * hprev),
    }
