import random
from fractions import Fraction

import pytest

from app.services.ring import U, WL, WRT, CoeffPoly, Gen, poly_arith, rat
from app.utils.errors import MissingGenerator, NotInvertible, ZeroDenominator


def w1(shift=0, der=0):
    return CoeffPoly.gen(WL, 1, der=der, shift=shift)


def w0t(shift=0, power=1, der=0):
    return CoeffPoly.gen(WRT, 0, der=der, shift=shift, power=power)


def random_poly(rng: random.Random, terms: int = 4) -> CoeffPoly:
    total = CoeffPoly()
    for _ in range(terms):
        mono = CoeffPoly.const(Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        for _ in range(rng.randint(0, 3)):
            family = rng.choice((WL, WRT, U))
            index = rng.randint(1, 3) if family == WL else rng.randint(0, 2)
            mono = mono * CoeffPoly.gen(family, index, der=rng.randint(0, 1), shift=rng.randint(-2, 2))
        if rng.random() < 0.3:
            mono = mono * w0t(shift=rng.randint(-1, 1), power=-1)
        total = total + mono
    return total


def test_laurent_cancellation():
    assert (w0t(power=-1) * w0t()).is_one()


def test_addition_collects_terms():
    assert w1() + w1() == w1().scale(2)
    assert poly_arith(w1(), w1(), "add") == 2 * w1()


def test_product_expands():
    product = (w1(0) - w1(2)) * w1(1)
    assert len(product.terms) == 2
    assert product == w1(0) * w1(1) - w1(2) * w1(1)


def test_shift_moves_every_generator():
    assert w1().shift(2) == w1(2)
    assert w0t(power=-1).shift(-1) == w0t(shift=-1, power=-1)
    p, q = w1(0) * w0t(1), w1(3) + 1
    assert (p * q).shift(4) == p.shift(4) * q.shift(4)
    assert p.shift(2).shift(-5) == p.shift(-3)


def test_derive_is_leibniz():
    w2 = CoeffPoly.gen(WL, 2, shift=3)
    expected = w1(der=1) * w2 + w1() * CoeffPoly.gen(WL, 2, der=1, shift=3)
    assert (w1() * w2).derive() == expected
    assert CoeffPoly.const(7).derive().is_zero()


def test_derive_of_inverse_w0():
    assert w0t(power=-1).derive() == -(w0t(power=-2) * w0t(der=1))


def test_shift_commutes_with_derive():
    rng = random.Random(3)
    for _ in range(200):
        p = random_poly(rng)
        k = rng.randint(-3, 3)
        assert p.derive().shift(k) == p.shift(k).derive()


def test_evaluate():
    assert w1().evaluate({Gen(WL, 1): Fraction(3, 2)}) == Fraction(3, 2)
    assert w0t(power=-1).evaluate({Gen(WRT, 0): Fraction(2, 3)}) == Fraction(3, 2)
    with pytest.raises(MissingGenerator):
        (w1() * w1(1)).evaluate({Gen(WL, 1): 1})
    with pytest.raises(ZeroDenominator):
        w0t(power=-1).evaluate({Gen(WRT, 0): 0})


def test_evaluate_is_a_homomorphism():
    rng = random.Random(11)
    for _ in range(50):
        p, q = random_poly(rng), random_poly(rng)
        gens = p.generators() | q.generators()
        assign = {g: Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 4)) for g in gens}
        assert (p + q).evaluate(assign) == p.evaluate(assign) + q.evaluate(assign)
        assert (p * q).evaluate(assign) == p.evaluate(assign) * q.evaluate(assign)


def test_only_w0_is_invertible():
    assert w0t(shift=2).scale(3).inverse() == w0t(shift=2, power=-1).scale(Fraction(1, 3))
    with pytest.raises(NotInvertible):
        (w1() + 1).inverse()
    with pytest.raises(ValueError):
        CoeffPoly.gen(WL, 1, power=-1)


def test_rat_parses_strings():
    assert rat("3/4") == Fraction(3, 4)
    assert rat(2) == Fraction(2)
    with pytest.raises(TypeError):
        rat(0.5)
