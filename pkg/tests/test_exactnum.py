"""Tests for exact rational polynomials, Sturm counts and Gamma shift ratios."""

import math
from fractions import Fraction

import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from spectral.errors import PoleError
from spectral.exactnum import (
    GammaRatio,
    PolyQ,
    as_rational,
    binomial,
    count_real_roots,
    gamma_float,
    gamma_shift_ratio,
    log_gamma_float,
    poly_arith,
    poly_diff,
    poly_divmod,
    poly_eval,
    poly_substitute_square,
    rising_product,
    sturm_sequence,
)

small_fractions = st.fractions(min_value=-10, max_value=10, max_denominator=12)
polys = st.lists(small_fractions, max_size=6).map(PolyQ)


def product_of_roots(*roots) -> PolyQ:
    out = PolyQ.one()
    for r in roots:
        out = out * PolyQ((-Fraction(r), Fraction(1)))
    return out


@pytest.mark.unit
class TestAsRational:
    def test_accepts_int_string_fraction(self):
        assert as_rational(3) == Fraction(3)
        assert as_rational(' 3/4 ') == Fraction(3, 4)
        assert as_rational(Fraction(-1, 2)) == Fraction(-1, 2)

    def test_rejects_float(self):
        with pytest.raises(TypeError):
            as_rational(0.5)

    def test_rejects_bool(self):
        with pytest.raises(TypeError):
            as_rational(True)

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            as_rational('one half')


@pytest.mark.unit
class TestPolyQ:
    def test_trailing_zeros_trimmed(self):
        p = PolyQ((Fraction(1), Fraction(2), Fraction(0), Fraction(0)))
        assert p.coeffs == (Fraction(1), Fraction(2))
        assert p.degree == 1

    def test_zero_polynomial(self):
        assert PolyQ.zero().degree == -1
        assert PolyQ.zero().is_zero
        assert PolyQ((0, 0)).is_zero

    def test_product_with_zero_is_zero(self):
        p = PolyQ((1, 2, 3))
        assert poly_arith(p, PolyQ.zero(), 'mul').is_zero

    def test_derivative_of_constant_is_zero(self):
        assert poly_diff(PolyQ.constant(7)).is_zero

    def test_eval_exact(self):
        p = PolyQ((Fraction(3, 2), Fraction(-1), Fraction(1, 2)))
        assert poly_eval(p, Fraction(1, 3)) == Fraction(3, 2) - Fraction(1, 3) + Fraction(1, 18)
        assert p(Fraction(2)) == Fraction(3, 2)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            poly_arith(PolyQ.one(), PolyQ.one(), 'div')  # type: ignore[arg-type]

    def test_shift_up_and_down(self):
        p = PolyQ((1, 2))
        assert p.shift_up(2).shift_down(2) == p
        with pytest.raises(ArithmeticError):
            p.shift_down(1)

    def test_valuation(self):
        assert PolyQ((0, 0, 3)).valuation == 2
        assert PolyQ.zero().valuation == -1

    def test_substitute_square(self):
        p = PolyQ((1, 2, 3))
        assert poly_substitute_square(p) == PolyQ((1, 0, 2, 0, 3))

    def test_float_evaluation_matches_exact(self):
        p = PolyQ((Fraction(1, 3), Fraction(-2), Fraction(5, 7)))
        assert p.evaluate(1.5) == pytest.approx(float(p(Fraction(3, 2))), rel=1e-15)

    def test_str(self):
        assert str(PolyQ((1, -2, Fraction(1, 2)))) == '1 - 2*v + 1/2*v^2'
        assert str(PolyQ.zero()) == '0'

    @given(polys, polys)
    def test_product_degree_adds(self, a, b):
        if a.is_zero or b.is_zero:
            assert (a * b).is_zero
        else:
            assert (a * b).degree == a.degree + b.degree

    @given(polys, polys, polys)
    @settings(max_examples=50)
    def test_distributive(self, a, b, c):
        assert a * (b + c) == a * b + a * c

    @given(polys, polys)
    def test_leibniz_rule(self, a, b):
        assert (a * b).diff() == a.diff() * b + a * b.diff()

    @given(polys, small_fractions)
    def test_eval_is_ring_homomorphism(self, a, x):
        assert (a * a)(x) == a(x) * a(x)
        assert (a - a).is_zero

    @given(polys, polys)
    @example(PolyQ((1, 0, 1)), PolyQ((0, 1)))
    def test_divmod_reconstructs(self, a, b):
        if b.is_zero:
            with pytest.raises(ZeroDivisionError):
                poly_divmod(a, b)
            return
        q, r = poly_divmod(a, b)
        assert q * b + r == a
        assert r.degree < b.degree


@pytest.mark.unit
class TestSturm:
    def test_sequence_ends_in_nonzero(self):
        seq = sturm_sequence(product_of_roots(1, 2, 3))
        assert not seq[-1].is_zero

    def test_counts_distinct_roots(self):
        p = product_of_roots(-2, Fraction(1, 3), 5)
        assert count_real_roots(p, -10, 10) == 3
        assert count_real_roots(p, 0, 10) == 2
        assert count_real_roots(p, Fraction(1, 3), 10) == 1  # lower end excluded
        assert count_real_roots(p, -10, Fraction(1, 3)) == 2  # upper end included

    def test_complex_roots_not_counted(self):
        assert count_real_roots(PolyQ((1, 0, 1)), -100, 100) == 0

    def test_empty_interval(self):
        assert count_real_roots(product_of_roots(1), 2, 2) == 0

    @given(st.lists(small_fractions, min_size=1, max_size=5, unique=True))
    @settings(max_examples=50)
    def test_matches_constructed_roots(self, roots):
        p = product_of_roots(*roots)
        assert count_real_roots(p, -11, 11) == len(roots)


@pytest.mark.unit
class TestGammaRatio:
    def test_half_integer_ratio(self):
        # Gamma(5/2) / Gamma(1/2) = 3/4
        assert gamma_shift_ratio(Fraction(1, 2), 2) == Fraction(3, 4)

    def test_zero_shift_is_one(self):
        assert gamma_shift_ratio(Fraction(-7, 3), 0) == 1

    def test_pole_rejected(self):
        with pytest.raises(PoleError):
            gamma_shift_ratio(-2, 3)
        with pytest.raises(PoleError):
            GammaRatio(Fraction(0), 1)

    def test_pole_error_is_value_error(self):
        with pytest.raises(ValueError):
            gamma_shift_ratio(0, 1)

    def test_rising_product_may_vanish(self):
        assert rising_product(-2, 4) == 0

    def test_to_float(self):
        r = GammaRatio(Fraction(1, 2), 3)
        assert r.to_float() == pytest.approx(math.gamma(3.5), rel=1e-14)

    def test_binomial(self):
        assert binomial(5, 2) == 10
        assert binomial(Fraction(1, 2), 2) == Fraction(-1, 8)
        assert binomial(Fraction(3, 2), 0) == 1

    def test_float_gamma(self):
        assert gamma_float(Fraction(1, 2)) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
        assert log_gamma_float(10) == pytest.approx(math.log(362880), rel=1e-14)

    @given(
        st.fractions(min_value=Fraction(1, 10), max_value=5, max_denominator=10),
        st.integers(min_value=0, max_value=8),
    )
    def test_recurrence(self, base, k):
        assert gamma_shift_ratio(base, k + 1) == gamma_shift_ratio(base, k) * (base + k)
