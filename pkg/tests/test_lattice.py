from fractions import Fraction

import pytest

from app.services.lattice import LatticeFn
from app.utils.errors import DeriveUnsupported, WindowTooSmall, ZeroDenominator


def fn(lo, *jets):
    return LatticeFn.from_jets(lo, [tuple(Fraction(v) for v in jet) for jet in jets])


def test_shift_moves_the_window():
    f = fn(0, (1,), (2,), (3,))
    moved = f.shift(1)
    assert moved.domain == (-1, 1)
    assert moved.value_at(-1) == 1
    assert moved.value_at(1) == 3


def test_products_intersect_windows_and_use_leibniz():
    f = fn(0, (1, 2), (3, 4), (5, 6))
    g = fn(1, (2, 1), (-1, 1), (7, 0))
    h = f * g
    assert h.domain == (1, 2)
    assert h.jet_at(1) == (6, 3 * 1 + 4 * 2)
    assert h.jet_at(2) == (-5, 5 * 1 + 6 * -1)


def test_disjoint_windows():
    with pytest.raises(WindowTooSmall):
        fn(0, (1,)) + fn(5, (1,))


def test_constants_have_no_window():
    c = LatticeFn.const(3)
    f = fn(2, (1,), (2,))
    assert (c * f).domain == (2, 3)
    assert (f + c).value_at(3) == 5
    assert c.shift(4) == c
    assert c.derive().is_zero()


def test_derive_consumes_jet_order():
    f = fn(0, (1, 2, 3), (4, 5, 6))
    assert f.derive().jet_at(1) == (5, 6)
    assert f.derive().derive().order == 0
    with pytest.raises(DeriveUnsupported):
        f.derive().derive().derive()


def test_inverse():
    f = fn(0, (2, 1), (-4, 3))
    assert (f * f.inverse()).is_one()
    with pytest.raises(ZeroDenominator):
        fn(0, (0, 1)).inverse()


def test_antidifferences():
    f = fn(0, (1,), (2,), (3,))
    total = f.cumulative_sum()
    assert total.domain == (0, 3)
    assert [total.value_at(i) for i in range(4)] == [0, 1, 3, 6]
    prod = fn(0, (2,), (3,)).cumulative_product()
    assert [prod.value_at(i) for i in range(3)] == [1, 2, 6]
    # G(x + 1) / G(x) recovers f
    ratio = prod.shift(1) * prod.inverse()
    assert ratio.value_at(0) == 2 and ratio.value_at(1) == 3


def test_restrict():
    f = fn(0, (1,), (2,), (3,), (4,))
    assert f.restrict(1, 9).domain == (1, 3)
    assert LatticeFn.const(2).restrict(0, 1).is_const
    with pytest.raises(WindowTooSmall):
        f.restrict(5, 6)
