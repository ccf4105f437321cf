from fractions import Fraction

import pytest

from app.services.params import FlowIndex, Params
from app.services.series import MSEQ, NSEQ, LambdaSeries, TimeShiftSequence, substitute_time_shift
from app.services.timeseries import TimePoly
from app.utils.errors import EmptyWindow, WindowOverflow

ONE = Fraction(1)


def series(coeffs, lo, hi, lo_exact=True, hi_exact=True):
    return LambdaSeries({k: Fraction(v) for k, v in coeffs.items()}, lo, hi, lo_exact, hi_exact, ONE)


def test_residue():
    assert LambdaSeries.monomial(-1, ONE).residue() == 1
    assert series({2: 1, 0: 3}, 0, 2).residue() == 0


def test_residue_against_geometric_expansion():
    # Res f(lambda) / (lambda (1 - lambda/lambda_1)) = f(lambda_1), lambda_1 = 2
    a1, a2 = Fraction(3, 5), Fraction(-7, 2)
    f = series({0: 1, -1: a1, -2: a2}, -2, 0)
    geometric = series({k: Fraction(1, 2**k) for k in range(5)}, 0, 4, True, False)
    integrand = (f * geometric).times_power(-1)
    assert integrand.residue() == 1 + a1 / 2 + a2 / 4


def test_truncated_tails_limit_the_product():
    upper_open = series({0: 1, 1: 1}, 0, 1, True, False)
    product = upper_open * upper_open
    assert product.hi == 1 and not product.hi_exact
    with pytest.raises(WindowOverflow):
        product.coefficient(2)
    lower_open = series({0: 1}, -1, 0, False, True)
    with pytest.raises(EmptyWindow):
        upper_open * lower_open


def test_inverse_and_log_of_one_sided_series():
    s = series({0: 1, -1: 2, -2: Fraction(1, 3)}, -4, 0, False, True)
    product = s * s.inverse_unit()
    for k in range(-4, 1):
        assert product.coefficient(k) == (1 if k == 0 else 0)
    doubled = (s * s).log_unit() - s.log_unit().scale(2)
    assert all(doubled.coefficient(k) == 0 for k in range(doubled.lo, 1))


def _times(p, *flows):
    one = TimePoly.const(flows, p.cap, ONE)
    return one, [TimePoly.var(flows, p.cap, f) for f in flows]


def test_lower_sequence_on_the_top_time():
    p = Params(1, 1, cap=1)
    one, (t,) = _times(p, FlowIndex(1, 0))
    out = substitute_time_shift(t, TimeShiftSequence(NSEQ, -1), p, 1)
    assert out.coefficient(0) == t
    assert out.coefficient(-1) == one.scale(-1)


def test_sequence_entries_scale_with_eps():
    p = Params(1, 1, eps=Fraction(1, 3), cap=1)
    one, (t,) = _times(p, FlowIndex(1, 0))
    out = substitute_time_shift(t, TimeShiftSequence(NSEQ, -1), p, 1)
    assert out.coefficient(-1) == one.scale(Fraction(-1, 3))


def test_constants_and_other_family_are_untouched():
    p = Params(1, 1, cap=2)
    one, (t,) = _times(p, FlowIndex(0, 0))
    out = substitute_time_shift(t, TimeShiftSequence(NSEQ, 1), p, 2)
    assert out.coefficient(0) == t
    assert out.coefficient(-1).is_zero() and out.coefficient(-2).is_zero()
    const = substitute_time_shift(one.scale(5), TimeShiftSequence(MSEQ, 1), p, 2)
    assert const.coefficient(0) == one.scale(5)
    assert const.coefficient(1).is_zero()


def test_upper_sequence_second_order():
    # N=M=1, t[0,1] has entry eps * lambda^2 / (2 * ratio) with ratio = 1/2
    p = Params(1, 1, cap=2)
    one, (t0, t1) = _times(p, FlowIndex(0, 0), FlowIndex(0, 1))
    out = substitute_time_shift(t0 + t1, TimeShiftSequence(MSEQ, 1), p, 2)
    assert out.coefficient(1) == one
    assert out.coefficient(2) == one


def test_order_beyond_cap_is_refused():
    p = Params(1, 1, cap=1)
    _, (t,) = _times(p, FlowIndex(1, 0))
    with pytest.raises(WindowOverflow):
        substitute_time_shift(t, TimeShiftSequence(NSEQ, -1), p, 2)


def test_restrict_marks_cut_ends():
    s = series({0: 1, -1: 2, -2: 3}, -2, 0)
    cut = s.restrict(-1, 4)
    assert (cut.lo, cut.hi, cut.lo_exact, cut.hi_exact) == (-1, 0, False, True)
    assert cut.residue() == 2
