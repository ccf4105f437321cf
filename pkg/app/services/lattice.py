"""
Sampled coefficient ring: functions on a window of the x-lattice.

A ``LatticeFn`` stores, for each lattice point i of a contiguous window
[lo, hi] (point i stands for x0 + i*eps), the jet (f, f', ..., f^(order)).
Shifts move the window, products intersect windows, and derivatives drop
one jet entry. x-independent constants carry no window at all.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Any, Sequence

from app.services.ring import rat
from app.utils.errors import DeriveUnsupported, WindowTooSmall, ZeroDenominator

Jet = tuple  # tuple[Fraction, ...]


def _jet_mul(f: Jet, g: Jet, order: int) -> Jet:
    out = []
    for k in range(order + 1):
        total = Fraction(0)
        for i in range(k + 1):
            a = f[i] if i < len(f) else 0
            b = g[k - i] if k - i < len(g) else 0
            if a and b:
                total += comb(k, i) * a * b
        out.append(total)
    return tuple(out)


def _jet_inverse(f: Jet) -> Jet:
    if f[0] == 0:
        raise ZeroDenominator("lattice value vanishes where an inverse is needed")
    inv0 = 1 / f[0]
    g = [inv0]
    for k in range(1, len(f)):
        total = Fraction(0)
        for i in range(1, k + 1):
            total += comb(k, i) * f[i] * g[k - i]
        g.append(-inv0 * total)
    return tuple(g)


class LatticeFn:
    """Jets of a function of x on a lattice window; constants have ``lo=None``."""

    __slots__ = ("lo", "jets", "order")

    def __init__(self, lo: int | None, jets: Sequence[Sequence[Any]], order: int | None):
        self.lo = lo
        self.order = order
        self.jets = tuple(tuple(Fraction(v) for v in jet) for jet in jets)
        if lo is None:
            if len(self.jets) != 1 or order is not None:
                raise ValueError("a constant carries a single value and no jet order")
        else:
            if not self.jets:
                raise WindowTooSmall("lattice function with empty window")
            if any(len(jet) != order + 1 for jet in self.jets):
                raise ValueError("every jet must have order+1 entries")

    # --- construction ---
    @classmethod
    def const(cls, c: Any) -> "LatticeFn":
        return cls(None, [(rat(c),)], None)

    @classmethod
    def from_jets(cls, lo: int, jets: Sequence[Sequence[Any]]) -> "LatticeFn":
        return cls(lo, jets, len(jets[0]) - 1)

    @property
    def is_const(self) -> bool:
        return self.lo is None

    @property
    def hi(self) -> int | None:
        return None if self.lo is None else self.lo + len(self.jets) - 1

    @property
    def domain(self) -> tuple[int, int] | None:
        return None if self.lo is None else (self.lo, self.hi)

    def jet_at(self, i: int) -> Jet:
        if self.lo is None:
            return self.jets[0]
        if not self.lo <= i <= self.hi:
            raise WindowTooSmall(f"lattice point {i} outside [{self.lo}, {self.hi}]")
        return self.jets[i - self.lo]

    def value_at(self, i: int) -> Fraction:
        return self.jet_at(i)[0]

    def _padded(self, i: int, order: int) -> Jet:
        jet = self.jet_at(i)
        return jet + (Fraction(0),) * (order + 1 - len(jet))

    # --- protocol ---
    def one_like(self) -> "LatticeFn":
        return LatticeFn.const(1)

    def zero_like(self) -> "LatticeFn":
        return LatticeFn.const(0)

    def is_zero(self) -> bool:
        return all(v == 0 for jet in self.jets for v in jet)

    def is_one(self) -> bool:
        return all(jet[0] == 1 and all(v == 0 for v in jet[1:]) for jet in self.jets)

    def _binary(self, other: "LatticeFn", op) -> "LatticeFn":
        if self.lo is None and other.lo is None:
            return LatticeFn(None, [op(self.jets[0], other.jets[0], 0)], None)
        orders = [o for o in (self.order, other.order) if o is not None]
        order = min(orders)
        lo = max(x for x in (self.lo, other.lo) if x is not None)
        hi = min(x for x in (self.hi, other.hi) if x is not None)
        if lo > hi:
            raise WindowTooSmall(
                f"lattice windows {self.domain} and {other.domain} do not overlap"
            )
        jets = [op(self._padded(i, order), other._padded(i, order), order) for i in range(lo, hi + 1)]
        return LatticeFn(lo, jets, order)

    @staticmethod
    def _coerce(other: Any) -> "LatticeFn | None":
        if isinstance(other, LatticeFn):
            return other
        if isinstance(other, (int, Fraction)):
            return LatticeFn.const(other)
        return None

    def __add__(self, other: Any) -> "LatticeFn":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._binary(o, lambda a, b, k: tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "LatticeFn":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._binary(o, lambda a, b, k: tuple(x - y for x, y in zip(a, b)))

    def __rsub__(self, other: Any) -> "LatticeFn":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self) -> "LatticeFn":
        return LatticeFn(self.lo, [tuple(-v for v in jet) for jet in self.jets], self.order)

    def __mul__(self, other: Any) -> "LatticeFn":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, LatticeFn):
            return NotImplemented
        if other.lo is None:
            return self.scale(other.jets[0][0])
        if self.lo is None:
            return other.scale(self.jets[0][0])
        return self._binary(other, _jet_mul)

    __rmul__ = __mul__

    def scale(self, c: Any) -> "LatticeFn":
        c = rat(c)
        return LatticeFn(self.lo, [tuple(v * c for v in jet) for jet in self.jets], self.order)

    def shift(self, k: int) -> "LatticeFn":
        """(S^k f)(x) = f(x + k*eps): the window moves to [lo - k, hi - k]."""
        if self.lo is None or k == 0:
            return self
        return LatticeFn(self.lo - k, self.jets, self.order)

    def derive(self) -> "LatticeFn":
        if self.lo is None:
            return LatticeFn.const(0)
        if self.order == 0:
            raise DeriveUnsupported("no derivative data left on the lattice")
        return LatticeFn(self.lo, [jet[1:] for jet in self.jets], self.order - 1)

    def inverse(self) -> "LatticeFn":
        if self.lo is None:
            if self.jets[0][0] == 0:
                raise ZeroDenominator("cannot invert the zero constant")
            return LatticeFn.const(1 / self.jets[0][0])
        return LatticeFn(self.lo, [_jet_inverse(jet) for jet in self.jets], self.order)

    # --- lattice tools ---
    def restrict(self, lo: int, hi: int) -> "LatticeFn":
        if self.lo is None:
            return self
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if lo > hi:
            raise WindowTooSmall(f"restriction to [{lo}, {hi}] is empty")
        return LatticeFn(lo, self.jets[lo - self.lo: hi - self.lo + 1], self.order)

    def cumulative_sum(self, start: Sequence[Any] | None = None) -> "LatticeFn":
        """G on [lo, hi+1] with G(lo) = start and G(i+1) = G(i) + f(i)."""
        if self.lo is None:
            raise WindowTooSmall("antidifference of a constant needs a window")
        acc = tuple(Fraction(v) for v in (start or (0,) * (self.order + 1)))
        jets = [acc]
        for jet in self.jets:
            acc = tuple(a + b for a, b in zip(acc, jet))
            jets.append(acc)
        return LatticeFn(self.lo, jets, self.order)

    def cumulative_product(self, start: Sequence[Any] | None = None) -> "LatticeFn":
        """G on [lo, hi+1] with G(lo) = start and G(i+1) = f(i) * G(i)."""
        if self.lo is None:
            raise WindowTooSmall("multiplicative antidifference of a constant needs a window")
        acc = tuple(Fraction(v) for v in (start or (1,) + (0,) * self.order))
        jets = [acc]
        for jet in self.jets:
            acc = _jet_mul(jet, acc, self.order)
            jets.append(acc)
        return LatticeFn(self.lo, jets, self.order)

    def first_nonzero(self) -> tuple[int | None, int] | None:
        """(lattice point, derivative order) of the first non-zero entry."""
        for offset, jet in enumerate(self.jets):
            for d, v in enumerate(jet):
                if v != 0:
                    return (None if self.lo is None else self.lo + offset, d)
        return None

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LatticeFn.const(other)
        if not isinstance(other, LatticeFn):
            return NotImplemented
        return (self.lo, self.order, self.jets) == (other.lo, other.order, other.jets)

    def __hash__(self) -> int:
        return hash((self.lo, self.order, self.jets))

    def __str__(self) -> str:
        if self.lo is None:
            return str(self.jets[0][0])
        head = ", ".join(str(j[0]) for j in self.jets[:3])
        more = ", ..." if len(self.jets) > 3 else ""
        return f"lattice[{self.lo}..{self.hi}]({head}{more})"

    def __repr__(self) -> str:
        return f"LatticeFn({self})"
