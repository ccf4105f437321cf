from fractions import Fraction

import pytest

from app.services.oper import (
    MONIC_LOWER,
    UNIT_UPPER,
    LambdaOp,
    commutator,
    from_right,
    invert,
    left_symbol,
    op_mul,
    op_mul_split,
    project,
    residue_lambda,
    residue_op,
    right_symbol,
    sharp,
)
from app.services.ring import U, WL, WRT, CoeffPoly
from app.utils.errors import AmbiguousTail, DpartUnsupported, NotInvertible, WindowOverflow

ONE = CoeffPoly.const(1)
EPS = Fraction(1, 2)


def w(i, shift=0, der=0):
    return CoeffPoly.gen(WL, i, der=der, shift=shift)


def u(j, shift=0):
    return CoeffPoly.gen(U, j, shift=shift)


def op(coeffs, lo, hi, lo_exact=True, hi_exact=True):
    return LambdaOp(coeffs, lo, hi, lo_exact, hi_exact, ONE, eps=EPS)


def lam(k):
    return LambdaOp.shift_power(k, ONE, EPS)


def test_shift_commutes_through_coefficients():
    product = op_mul(lam(1), op({0: w(1)}, 0, 0))
    assert product.coefficient(1) == w(1, shift=1)


def test_eps_d_acts_as_a_derivation():
    p, q = op_mul_split(LambdaOp.eps_d(1, ONE, EPS), op({0: w(1)}, 0, 0))
    assert p.coefficient(0) == w(1, der=1).scale(EPS)
    assert q.coefficient(0) == w(1)
    with pytest.raises(DpartUnsupported):
        op_mul(LambdaOp.eps_d(1, ONE, EPS), op({0: w(1)}, 0, 0))
    with pytest.raises(DpartUnsupported):
        op_mul(LambdaOp.eps_d(1, ONE, EPS), LambdaOp.eps_d(1, ONE, EPS))


def test_commutator_with_eps_d():
    bracket = commutator(LambdaOp.eps_d(2, ONE, EPS), op({-1: w(1)}, -1, -1))
    assert bracket.coefficient(-1) == w(1, der=1).scale(2 * EPS)
    assert bracket.dpart == 0


def test_projections():
    lax = op({1: ONE, 0: u(0), -1: u(-1)}, -1, 1)
    minus = project(lax, "minus")
    assert minus.coeffs == {-1: u(-1)}
    plus = project(lax, "plus")
    assert set(plus.coeffs) == {0, 1}
    assert (plus + minus - lax).is_zero()


def test_projection_refuses_hidden_terms():
    truncated = op({3: ONE}, 2, 3, lo_exact=False)
    with pytest.raises(AmbiguousTail):
        project(truncated, "minus")


def test_sharp():
    s = sharp(lam(1))
    assert s.coeffs == {-1: ONE}
    a = op({1: w(1), -2: w(2, shift=1)}, -2, 1)
    assert sharp(sharp(a)).coeffs == a.coeffs
    assert sharp(op({1: w(1)}, 1, 1)).coefficient(-1) == w(1, shift=-1)


def test_invert_monic_lower():
    p = op({0: ONE, -1: w(1)}, -1, 0)
    inv = invert(p, MONIC_LOWER, depth=3)
    back = op_mul(p, inv)
    assert back.coefficient(0) == 1
    for k in (-1, -2, -3):
        assert back.coefficient(k).is_zero()
    assert inv.coefficient(-1) == -w(1)
    assert invert(lam(0), MONIC_LOWER, depth=2).coefficient(0) == 1


def test_invert_unit_upper():
    w0 = CoeffPoly.gen(WRT, 0)
    inv = invert(op({0: w0}, 0, 0), UNIT_UPPER, depth=2)
    assert inv.coefficient(0) == CoeffPoly.gen(WRT, 0, power=-1)
    with pytest.raises(NotInvertible):
        invert(op({0: ONE, -1: w(1)}, -1, 0), UNIT_UPPER, depth=2)


def test_symbols_and_residue():
    assert left_symbol(lam(1)).coefficient(1) == 1
    b = w(2)
    right = right_symbol(from_right({2: b}, (2, 2, True, True), ONE, EPS))
    assert right.coefficient(2) == b
    pl = op({0: ONE, -1: w(1), -2: w(2)}, -2, 0, lo_exact=False)
    assert left_symbol(pl).coefficient(0) == 1
    with pytest.raises(WindowOverflow):
        left_symbol(pl, lo=-3)
    assert residue_op(pl) == w(1)


def test_restrict_truncates_cut_ends():
    a = op({1: ONE, 0: w(1), -1: w(2)}, -1, 1)
    cut = a.restrict(0, 5)
    assert (cut.lo, cut.hi, cut.lo_exact, cut.hi_exact) == (0, 1, False, True)
    with pytest.raises(WindowOverflow):
        cut.coefficient(-1)
    assert residue_lambda(right_symbol(a)) == w(2, shift=1)
