from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from silver.exact_scalar import ONE, RHO, SQRT2, RadicalScalar, rho_pow
from silver.schedule import (
    Schedule,
    horizon,
    iteration_bound,
    level_of_horizon,
    rate,
    schedule_direct,
    schedule_recursive,
    silver_step,
    step_sum,
    valuation,
)


@pytest.mark.parametrize("t,v", [(1, 0), (4, 2), (12, 2), (96, 5), (7, 0)])
def test_valuation(t, v):
    assert valuation(t) == v


@settings(deadline=None)
@given(st.integers(1, 10**12))
def test_valuation_matches_brute_force(t):
    assert valuation(t) == oracles.brute_valuation(t)


def test_valuation_rejects_zero():
    with pytest.raises(ValueError):
        valuation(0)


@pytest.mark.parametrize(
    "t,expected",
    [(0, SQRT2), (1, RadicalScalar(2)), (3, 1 + RHO), (7, RadicalScalar(4, 2)), (15, 1 + rho_pow(3))],
)
def test_silver_step(t, expected):
    assert silver_step(t) == expected


def test_silver_step_negative_index():
    with pytest.raises(ValueError):
        silver_step(-1)


class TestSchedules:
    def test_level_one(self):
        assert schedule_direct(1).steps == (SQRT2,)

    def test_level_two(self):
        assert schedule_direct(2).steps == (SQRT2, RadicalScalar(2), SQRT2)

    def test_level_three(self):
        two = RadicalScalar(2)
        assert schedule_direct(3).steps == (SQRT2, two, SQRT2, 1 + RHO, SQRT2, two, SQRT2)

    @pytest.mark.parametrize("k", range(1, 13))
    def test_direct_equals_recursive(self, k):
        assert schedule_direct(k) == schedule_recursive(k)

    @pytest.mark.parametrize("k", [1, 4, 9])
    def test_palindrome(self, k):
        s = schedule_direct(k).steps
        assert s == s[::-1]

    @pytest.mark.parametrize("k", range(1, 10))
    def test_spike(self, k):
        # the centre step t = 2^(k-1) - 1 has valuation k - 1, so it is 1 + rho^(k-2)
        s = schedule_direct(k).steps
        top = 1 + rho_pow(k - 2)
        assert max(s) == top
        assert s.count(top) == 1
        assert s.index(top) == 2 ** (k - 1) - 1
        assert all(ONE < a <= 1 + rho_pow(k - 1) for a in s)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_matches_mpmath_oracle(self, k):
        with mpmath.mp.workprec(200):
            for t, a in enumerate(schedule_direct(k)):
                assert abs(oracles.radical_value(a) - oracles.step_value(t)) < mpmath.mpf(2) ** -180

    def test_k6_has_63_steps(self):
        s = schedule_direct(6)
        assert s.n == 63
        assert s[31] == 1 + rho_pow(4) == RadicalScalar(18, 12)
        assert max(s) == s[31]

    def test_rejects_bad_level(self):
        with pytest.raises(ValueError):
            schedule_direct(0)
        with pytest.raises(ValueError):
            schedule_recursive(-1)

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            Schedule((SQRT2, SQRT2), 1)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Schedule((RadicalScalar(-1),), 1)


class TestStepSum:
    def test_k1(self):
        assert step_sum(1) == RHO - 1 == SQRT2

    def test_k2(self):
        assert step_sum(2) == RadicalScalar(2, 2)

    def test_k5_against_pell_expansion(self):
        # rho^5 = 41 + 29 sqrt 2
        assert step_sum(5) == RadicalScalar(40, 29)

    @pytest.mark.parametrize("k", range(1, 21))
    def test_equals_rho_power_minus_one(self, k):
        assert step_sum(k) == rho_pow(k) - 1

    @pytest.mark.parametrize("k", range(1, 11))
    def test_matches_naive_sum(self, k):
        total = RadicalScalar(0)
        for a in schedule_direct(k):
            total = total + a
        assert step_sum(k) == total

    def test_rejects_level_zero(self):
        with pytest.raises(ValueError):
            step_sum(0)


class TestHorizon:
    @pytest.mark.parametrize("k", range(0, 12))
    def test_roundtrip(self, k):
        assert level_of_horizon(horizon(k)) == k

    @pytest.mark.parametrize("n", [2, 4, 5, 6, 62, 100])
    def test_rejects_other_horizons(self, n):
        with pytest.raises(ValueError):
            level_of_horizon(n)


class TestRate:
    def test_r1(self):
        info = rate(1)
        assert round(float(info.r.mid), 4) == 0.1816
        assert Fraction("0.1815846585571613") < info.r.lo <= info.r.hi < Fraction("0.1815846585571615")

    def test_r0(self):
        info = rate(0)
        assert info.r.lo == info.r.hi == Fraction(1, 2)
        assert info.c == 1
        assert info.upper_bound is None

    @pytest.mark.parametrize("k", range(0, 21))
    def test_matches_closed_form(self, k):
        info = rate(k, 256)
        with mpmath.mp.workprec(300):
            v = oracles.r_value(k)
            lo = mpmath.mpf(info.r.lo.numerator) / info.r.lo.denominator
            hi = mpmath.mpf(info.r.hi.numerator) / info.r.hi.denominator
            assert lo <= v <= hi
        assert info.r.width < Fraction(1, 2**240)

    def test_r6_regression(self):
        # 256-bit evaluation of the closed form, recorded
        assert abs(float(rate(6).r.mid) - 0.0025189798155386897) < 1e-18

    def test_enclosures_nest(self):
        assert rate(5, 512).r.subset_of(rate(5, 128).r)

    @pytest.mark.parametrize("k", range(1, 21))
    def test_below_asymptotic_bound(self, k):
        assert rate(k).within_bound()

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            rate(-1)


class TestIterationBound:
    def test_base_rate(self):
        assert iteration_bound(1, 1, 0.5).n == 0

    def test_eps_018(self):
        assert iteration_bound(1, 1, 0.18).n == 3

    def test_small_eps_against_closed_form(self):
        ib = iteration_bound(1, 1, 1e-4)
        assert ib.closed_form == pytest.approx((1 / 2e-4) ** (mpmath.log(2) / mpmath.log(1 + mpmath.sqrt(2))))
        # the schedule horizon is within one doubling of the closed form
        assert ib.n / 2 <= ib.closed_form <= 2 * ib.n + 1

    @pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
    def test_rejects_nonpositive(self, args):
        with pytest.raises(ValueError):
            iteration_bound(*args)
