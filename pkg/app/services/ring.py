"""
Exact coefficient rings.

``Rat`` is :class:`fractions.Fraction`. ``CoeffPoly`` is the differential
shift-polynomial ring in the free generators w_i, w~_i, u_j (and all their
x-derivatives and x-shifts), with Laurent exponents allowed on w~_0 only.

Every coefficient type used by operators and series follows the same small
protocol (``shift``, ``derive``, ``inverse``, ``scale``, ``is_zero``,
``is_one``, ``one_like``, ``zero_like`` plus ``+ - *``). Plain Fractions are
adapted to it by the ``ring_*`` helpers at the bottom of this module.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping

from app.utils.errors import MissingGenerator, NotInvertible, ZeroDenominator

logger = logging.getLogger(__name__)

Rat = Fraction

WL = "wL"
WRT = "wRt"
U = "u"
FAMILIES = (WL, WRT, U)


def rat(value: Any) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string into an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


@dataclass(frozen=True, order=True)
class Gen:
    """Generator f^{(der)}(x + shift*eps) of a free coefficient family."""

    family: str
    index: int
    der: int = 0
    shift: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown generator family {self.family!r}")
        if self.family == WL and self.index < 1:
            raise ValueError("w_i is indexed from 1")
        if self.family == WRT and self.index < 0:
            raise ValueError("w~_i is indexed from 0")
        if self.der < 0:
            raise ValueError("derivative order must be a natural number")

    @property
    def is_laurent(self) -> bool:
        return self.family == WRT and self.index == 0 and self.der == 0

    def shifted(self, k: int) -> "Gen":
        return Gen(self.family, self.index, self.der, self.shift + k)

    def derived(self) -> "Gen":
        return Gen(self.family, self.index, self.der + 1, self.shift)

    def __str__(self) -> str:
        if self.family == WL:
            name = f"w{self.index}"
        elif self.family == WRT:
            name = f"wt{self.index}"
        else:
            name = f"u{self.index}" if self.index >= 0 else f"u({self.index})"
        if self.der == 0:
            mark = ""
        elif self.der <= 2:
            mark = "'" * self.der
        else:
            mark = f"^({self.der})"
        return f"{name}{mark}[{self.shift}]"


Monomial = tuple  # tuple[tuple[Gen, int], ...] sorted by Gen, exponents non-zero


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps: dict[Gen, int] = dict(a)
    for g, e in b:
        total = exps.get(g, 0) + e
        if total:
            exps[g] = total
        else:
            del exps[g]
    return tuple(sorted(exps.items()))


def _mono_str(m: Monomial) -> str:
    parts = []
    for g, e in m:
        parts.append(str(g) if e == 1 else f"{g}^{e}")
    return "*".join(parts)


def _mono_degree(m: Monomial) -> int:
    return sum(abs(e) for _, e in m)


class CoeffPoly:
    """
    Sparse polynomial: monomial -> Fraction, zero coefficients never stored.

    Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean: dict[Monomial, Fraction] = {}
        for m, c in (terms or {}).items():
            if c:
                for g, e in m:
                    if e < 0 and not g.is_laurent:
                        raise ValueError(f"negative exponent on non-Laurent generator {g}")
                clean[m] = Fraction(c)
        self.terms = clean

    # --- construction ---
    @classmethod
    def const(cls, c: Any) -> "CoeffPoly":
        return cls({(): rat(c)})

    @classmethod
    def gen(cls, family: str, index: int, der: int = 0, shift: int = 0, power: int = 1) -> "CoeffPoly":
        return cls({((Gen(family, index, der, shift), power),): Fraction(1)})

    @classmethod
    def of(cls, g: Gen, power: int = 1) -> "CoeffPoly":
        return cls({((g, power),): Fraction(1)})

    # --- protocol ---
    def one_like(self) -> "CoeffPoly":
        return CoeffPoly.const(1)

    def zero_like(self) -> "CoeffPoly":
        return CoeffPoly()

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == {(): Fraction(1)}

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def _coerce(self, other: Any) -> "CoeffPoly | None":
        if isinstance(other, CoeffPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return CoeffPoly.const(other)
        return None

    def __add__(self, other: Any) -> "CoeffPoly":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return CoeffPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "CoeffPoly":
        return CoeffPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: Any) -> "CoeffPoly":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: Any) -> "CoeffPoly":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other: Any) -> "CoeffPoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, CoeffPoly):
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = _mono_mul(ma, mb)
                out[m] = out.get(m, Fraction(0)) + ca * cb
        return CoeffPoly(out)

    __rmul__ = __mul__

    def scale(self, c: Any) -> "CoeffPoly":
        c = rat(c)
        if not c:
            return CoeffPoly()
        return CoeffPoly({m: v * c for m, v in self.terms.items()})

    def __pow__(self, k: int) -> "CoeffPoly":
        if k < 0:
            return self.inverse() ** (-k)
        result = self.one_like()
        for _ in range(k):
            result = result * self
        return result

    def shift(self, k: int) -> "CoeffPoly":
        """Ring automorphism S^k: every generator f[j] goes to f[j+k]."""
        if k == 0:
            return self
        return CoeffPoly(
            {tuple((g.shifted(k), e) for g, e in m): c for m, c in self.terms.items()}
        )

    def derive(self) -> "CoeffPoly":
        """Leibniz derivation d/dx."""
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            for i, (g, e) in enumerate(m):
                rest = m[:i] + m[i + 1:]
                if e != 1:
                    rest = _mono_mul(rest, ((g, e - 1),))
                dm = _mono_mul(rest, ((g.derived(), 1),))
                out[dm] = out.get(dm, Fraction(0)) + c * e
        return CoeffPoly(out)

    def inverse(self) -> "CoeffPoly":
        """Inverse of a unit: a nonzero constant times a Laurent monomial in w~_0."""
        if len(self.terms) != 1:
            raise NotInvertible(f"{self} is not a unit of the polynomial ring")
        (m, c), = self.terms.items()
        if any(not g.is_laurent for g, _ in m):
            raise NotInvertible(f"{self} is not a unit of the polynomial ring")
        return CoeffPoly({tuple((g, -e) for g, e in m): 1 / c})

    # --- evaluation ---
    def generators(self) -> set[Gen]:
        return {g for m in self.terms for g, _ in m}

    def evaluate(self, assign: Mapping[Gen, Fraction]) -> Fraction:
        """Ring homomorphism into the rationals given a value for every generator."""
        total = Fraction(0)
        for m, c in self.terms.items():
            value = c
            for g, e in m:
                if g not in assign:
                    raise MissingGenerator(f"no value assigned to {g}")
                v = rat(assign[g])
                if e < 0:
                    if v == 0:
                        raise ZeroDenominator(f"{g} assigned zero but appears inverted")
                    value /= v ** (-e)
                else:
                    value *= v ** e
            total += value
        return total

    def realize(self, images: Mapping[tuple[str, int], Any]) -> Any:
        """
        Map into another protocol ring. ``images`` sends (family, index) to the
        image of the underived, unshifted generator; derivatives and shifts are
        taken in the target ring.
        """
        if not images:
            raise MissingGenerator("realize needs at least one generator image")
        one = ring_one_like(next(iter(images.values())))
        cache: dict[Gen, Any] = {}

        def image(g: Gen) -> Any:
            if g not in cache:
                key = (g.family, g.index)
                if key not in images:
                    raise MissingGenerator(f"no image for family {key}")
                value = images[key]
                for _ in range(g.der):
                    value = ring_derive(value)
                cache[g] = ring_shift(value, g.shift)
            return cache[g]

        total = ring_zero_like(one)
        for m, c in sorted(self.terms.items()):
            term = ring_scale(one, c)
            for g, e in m:
                factor = image(g)
                if e < 0:
                    factor = ring_inverse(factor)
                for _ in range(abs(e)):
                    term = term * factor
            total = total + term
        return total

    # --- comparison / display ---
    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = CoeffPoly.const(other)
        if not isinstance(other, CoeffPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m, c in sorted(self.terms.items(), key=lambda mc: (_mono_degree(mc[0]), mc[0])):
            body = _mono_str(m)
            if not body:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(body)
            elif c == -1:
                pieces.append(f"-{body}")
            else:
                pieces.append(f"{c}*{body}")
        return " + ".join(pieces).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"CoeffPoly({self})"


def poly_arith(a: CoeffPoly, b: CoeffPoly, op: str) -> CoeffPoly:
    """Dispatch helper for the three ring operations."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    raise ValueError(f"unknown operation {op!r}")


# --- protocol adapters (Fractions behave as x-independent constants) ---

def ring_shift(x: Any, k: int) -> Any:
    return x if isinstance(x, Fraction) else x.shift(k)


def ring_derive(x: Any) -> Any:
    return Fraction(0) if isinstance(x, Fraction) else x.derive()


def ring_inverse(x: Any) -> Any:
    if isinstance(x, Fraction):
        if x == 0:
            raise ZeroDenominator("cannot invert zero")
        return 1 / x
    return x.inverse()


def ring_scale(x: Any, c: Any) -> Any:
    return x * rat(c) if isinstance(x, Fraction) else x.scale(c)


def ring_is_zero(x: Any) -> bool:
    return x == 0 if isinstance(x, Fraction) else x.is_zero()


def ring_is_one(x: Any) -> bool:
    return x == 1 if isinstance(x, Fraction) else x.is_one()


def ring_one_like(x: Any) -> Any:
    return Fraction(1) if isinstance(x, Fraction) else x.one_like()


def ring_zero_like(x: Any) -> Any:
    return Fraction(0) if isinstance(x, Fraction) else x.zero_like()


def ring_sum(items: Iterable[Any], zero: Any) -> Any:
    total = zero
    for item in items:
        total = total + item
    return total
