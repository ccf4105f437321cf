from fractions import Fraction

import sympy

from app.services.lax import (
    a_op,
    b_op,
    band_lax,
    lax_operator,
    logs,
    root_power,
    roots,
    u_from_wL,
    u_from_wR,
)
from app.services.oper import commutator, op_power, op_scale, project
from app.services.params import FlowIndex, Params, gamma_ratio, harmonic, shift_coefficient
from app.services.residual import find_nonzero
from app.services.ring import WL, WRT, CoeffPoly


def vanishes(obj) -> bool:
    return find_nonzero(obj) is None


def test_trivial_pair(trivial11):
    lax = lax_operator(trivial11)
    assert lax.coefficient(1) == 1
    assert all(lax.coefficient(k) == 0 for k in (0, -1, -2))
    assert vanishes(roots(trivial11).rootN - root_power(trivial11, 1, "left"))
    assert logs(trivial11).log_plus.dpart == 1


def test_symbolic_closed_forms(symbolic11):
    u = u_from_wL(symbolic11)
    w1 = CoeffPoly.gen(WL, 1)
    assert u[0] == w1 - w1.shift(1)
    assert lax_operator(symbolic11).coefficient(0) == u[0]
    ur = u_from_wR(symbolic11)
    assert ur[-1] == CoeffPoly.gen(WRT, 0) * CoeffPoly.gen(WRT, 0, shift=-1, power=-1)


def test_both_conjugations_agree(pair11, pair21):
    for pair in (pair11, pair21):
        assert vanishes(lax_operator(pair, "left") - lax_operator(pair, "right"))


def test_closed_forms_match_the_band_operator(pair21):
    lax = band_lax(pair21)
    from_left, from_right = u_from_wL(pair21), u_from_wR(pair21)
    for j, value in from_left.items():
        assert vanishes(lax.coefficient(j) - value)
        assert vanishes(from_right[j] - value)
    assert from_right[2].is_one()


def test_roots_raise_to_l(pair21):
    lax = band_lax(pair21)
    root_n, root_m = roots(pair21)
    assert vanishes(op_power(root_n, 2) - lax)
    assert vanishes(op_power(root_m, 1) - lax)
    w0 = pair21.w_tilde(0)
    assert vanishes(root_m.coefficient(-1) - w0 * w0.shift(-1).inverse())


def test_logarithms(pair11):
    log_ops = logs(pair11)
    assert log_ops.log_l.dpart == 0
    assert log_ops.log_plus.dpart == pair11.params.N
    root_n = root_power(pair11, 1, "left")
    assert vanishes(commutator(log_ops.log_plus, root_n))


def test_generators_for_n1_m1(pair11):
    eps = pair11.eps
    assert vanishes(b_op(pair11, FlowIndex(1, 0)) - op_scale(root_power(pair11, 1, "left"), 1 / eps))
    a_top, a_zero = a_op(pair11, FlowIndex(1, 0)), a_op(pair11, FlowIndex(0, 0))
    lax = band_lax(pair11)
    assert vanishes(commutator(a_top, lax) - commutator(a_zero, lax))
    assert vanishes(a_zero + op_scale(project(lax, "minus"), 1 / eps))


def test_flow_constants():
    p = Params(2, 1)
    assert gamma_ratio(FlowIndex(2, 2), p) == Fraction(4, 15)
    assert gamma_ratio(FlowIndex(0, 0), p) == 1
    oracle = sympy.gamma(sympy.Rational(3, 2)) / sympy.gamma(sympy.Rational(7, 2))
    ratio = gamma_ratio(FlowIndex(2, 2), p)
    assert sympy.simplify(oracle - sympy.Rational(ratio.numerator, ratio.denominator)) == 0
    assert harmonic(0) == 0
    assert harmonic(4) == Fraction(str(sympy.harmonic(4)))
    # entry of [lambda^{-1}]^2 on t[2,0]: exponent 1, coefficient 1
    assert shift_coefficient(p, FlowIndex(2, 0)) == 1


def test_symbolic_closed_form_realized_on_a_sample(symbolic11, pair11):
    images = {(WL, i): pair11.w(i) for i in (1, 2)}
    for j, closed in u_from_wL(symbolic11).items():
        assert vanishes(closed.realize(images) - u_from_wL(pair11)[j])
