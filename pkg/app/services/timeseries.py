"""
Truncated multivariate polynomials in hierarchy times.

``TimePoly`` is the carrier for everything that depends on t: the dressing
coefficients after Sato evolution, the one-form components and log tau. The
variables are ``TimeVar`` (t_{alpha,n}) or ``SpectralVar`` (formal
parameters such as lambda^{-1} used inside time-shift expansions). All of
them share one total-degree cap; arithmetic drops anything above it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Any, Iterable, Mapping, Sequence

from app.services.ring import (
    ring_derive,
    ring_inverse,
    ring_is_one,
    ring_is_zero,
    ring_one_like,
    ring_scale,
    ring_shift,
    ring_zero_like,
)
from app.utils.errors import VariableSetMismatch, ZeroDenominator


@dataclass(frozen=True, order=True)
class TimeVar:
    """The time t_{alpha,n}."""

    alpha: int
    n: int

    def __str__(self) -> str:
        return f"t[{self.alpha},{self.n}]"


@dataclass(frozen=True, order=True)
class SpectralVar:
    """A formal expansion parameter (lambda^{-1}, lambda, or a nilpotent offset)."""

    name: str

    def __str__(self) -> str:
        return self.name


Variable = TimeVar | SpectralVar
Exps = tuple  # tuple[int, ...]


class TimePoly:
    """Sparse map exponent-vector -> coefficient, total degree <= cap."""

    __slots__ = ("variables", "cap", "terms", "unit")

    def __init__(
        self,
        variables: Sequence[Variable],
        cap: int,
        terms: Mapping[Exps, Any],
        unit: Any = Fraction(1),
    ):
        self.variables = tuple(variables)
        self.cap = cap
        self.unit = ring_one_like(unit)
        nvars = len(self.variables)
        clean = {}
        for e, c in terms.items():
            if len(e) != nvars:
                raise VariableSetMismatch(f"exponent {e} does not match {len(self.variables)} variables")
            if sum(e) <= cap and not ring_is_zero(c):
                clean[tuple(e)] = c
        self.terms = clean

    # --- construction ---
    @classmethod
    def const(cls, variables: Sequence[Variable], cap: int, c: Any) -> "TimePoly":
        zero = (0,) * len(tuple(variables))
        return cls(variables, cap, {zero: c}, unit=c)

    @classmethod
    def var(cls, variables: Sequence[Variable], cap: int, v: Variable, unit: Any = Fraction(1)) -> "TimePoly":
        variables = tuple(variables)
        e = tuple(1 if w == v else 0 for w in variables)
        if sum(e) != 1:
            raise VariableSetMismatch(f"{v} is not among {', '.join(map(str, variables))}")
        return cls(variables, cap, {e: ring_one_like(unit)}, unit=unit)

    def zero_exps(self) -> Exps:
        return (0,) * len(self.variables)

    # --- protocol ---
    def one_like(self) -> "TimePoly":
        return TimePoly(self.variables, self.cap, {self.zero_exps(): self.unit}, self.unit)

    def zero_like(self) -> "TimePoly":
        return TimePoly(self.variables, self.cap, {}, self.unit)

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return list(self.terms) == [self.zero_exps()] and ring_is_one(self.terms[self.zero_exps()])

    def constant(self) -> Any:
        return self.terms.get(self.zero_exps(), ring_zero_like(self.unit))

    def coefficient(self, exps: Exps) -> Any:
        return self.terms.get(tuple(exps), ring_zero_like(self.unit))

    def _same(self, other: "TimePoly") -> None:
        if self.variables != other.variables or self.cap != other.cap:
            raise VariableSetMismatch(
                f"({', '.join(map(str, self.variables))}; D={self.cap}) vs "
                f"({', '.join(map(str, other.variables))}; D={other.cap})"
            )

    def _coerce(self, other: Any) -> "TimePoly":
        if isinstance(other, TimePoly):
            self._same(other)
            return other
        return TimePoly(self.variables, self.cap, {self.zero_exps(): other}, self.unit)

    def __add__(self, other: Any) -> "TimePoly":
        o = self._coerce(other)
        out = dict(self.terms)
        for e, c in o.terms.items():
            out[e] = out[e] + c if e in out else c
        return TimePoly(self.variables, self.cap, out, self.unit)

    __radd__ = __add__

    def __neg__(self) -> "TimePoly":
        return TimePoly(self.variables, self.cap, {e: -c for e, c in self.terms.items()}, self.unit)

    def __sub__(self, other: Any) -> "TimePoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "TimePoly":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "TimePoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, TimePoly):
            return TimePoly(self.variables, self.cap, {e: c * other for e, c in self.terms.items()}, self.unit)
        self._same(other)
        left = sorted(self.terms.items(), key=lambda ec: sum(ec[0]))
        right = sorted(other.terms.items(), key=lambda ec: sum(ec[0]))
        out: dict[Exps, Any] = {}
        for ea, ca in left:
            da = sum(ea)
            for eb, cb in right:
                if da + sum(eb) > self.cap:
                    break
                e = tuple(x + y for x, y in zip(ea, eb))
                prod = ca * cb
                out[e] = out[e] + prod if e in out else prod
        return TimePoly(self.variables, self.cap, out, self.unit)

    def __rmul__(self, other: Any) -> "TimePoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return TimePoly(self.variables, self.cap, {e: other * c for e, c in self.terms.items()}, self.unit)

    def __pow__(self, k: int) -> "TimePoly":
        if k < 0:
            return self.inverse() ** (-k)
        result = self.one_like()
        for _ in range(k):
            result = result * self
        return result

    def scale(self, c: Any) -> "TimePoly":
        return TimePoly(self.variables, self.cap, {e: ring_scale(v, c) for e, v in self.terms.items()}, self.unit)

    def shift(self, k: int) -> "TimePoly":
        return TimePoly(self.variables, self.cap, {e: ring_shift(c, k) for e, c in self.terms.items()}, self.unit)

    def derive(self) -> "TimePoly":
        """x-derivative, coefficientwise."""
        return TimePoly(self.variables, self.cap, {e: ring_derive(c) for e, c in self.terms.items()}, self.unit)

    def inverse(self) -> "TimePoly":
        c0 = self.constant()
        if ring_is_zero(c0):
            raise ZeroDenominator("time series with vanishing constant term is not invertible")
        c0inv = ring_inverse(c0)
        y = self * c0inv - self.one_like()
        result = self.one_like()
        power = self.one_like()
        for k in range(1, self.cap + 1):
            power = power * (-y)
            result = result + power
        return result * c0inv

    # --- calculus in t ---
    def index(self, v: Variable) -> int:
        try:
            return self.variables.index(v)
        except ValueError as exc:
            raise VariableSetMismatch(f"{v} is not an active variable") from exc

    def derivative(self, v: Variable) -> "TimePoly":
        i = self.index(v)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = ring_scale(c, e[i])
        return TimePoly(self.variables, self.cap, out, self.unit)

    def truncate(self, d: int) -> "TimePoly":
        """Drop terms of total degree > d, keep the cap."""
        return TimePoly(self.variables, self.cap, {e: c for e, c in self.terms.items() if sum(e) <= d}, self.unit)

    def truncate_in(self, variables: Iterable[Variable], order: int) -> "TimePoly":
        """Drop terms of degree > order in any of the listed variables; unlisted ones are ignored."""
        wanted = set(variables)
        idx = [i for i, v in enumerate(self.variables) if v in wanted]
        if not idx:
            return self
        kept = {e: c for e, c in self.terms.items() if all(e[i] <= order for i in idx)}
        return TimePoly(self.variables, self.cap, kept, self.unit)

    def with_cap(self, cap: int) -> "TimePoly":
        return TimePoly(self.variables, cap, self.terms, self.unit)

    def embed(self, variables: Sequence[Variable]) -> "TimePoly":
        """Re-index into a variable list containing the current one."""
        variables = tuple(variables)
        if variables == self.variables:
            return self
        missing = [v for v in self.variables if v not in variables]
        if missing:
            raise VariableSetMismatch(f"cannot embed: {', '.join(map(str, missing))} not in target")
        pos = [variables.index(v) for v in self.variables]
        out = {}
        for e, c in self.terms.items():
            ne = [0] * len(variables)
            for p, k in zip(pos, e):
                ne[p] = k
            out[tuple(ne)] = c
        return TimePoly(variables, self.cap, out, self.unit)

    def substitute(self, images: Mapping[Variable, "TimePoly"]) -> "TimePoly":
        """Polynomial substitution v -> images[v]; unlisted variables stay put."""
        for img in images.values():
            self._same(img)
        powers: dict[tuple[int, int], TimePoly] = {}

        def power(i: int, k: int) -> TimePoly:
            key = (i, k)
            if key not in powers:
                v = self.variables[i]
                base = images[v] if v in images else TimePoly.var(self.variables, self.cap, v, self.unit)
                powers[key] = self.one_like() if k == 0 else power(i, k - 1) * base
            return powers[key]

        result = self.zero_like()
        for e, c in self.terms.items():
            term = self.one_like() * c
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    def set_zero(self, v: Variable) -> "TimePoly":
        i = self.index(v)
        return TimePoly(self.variables, self.cap, {e: c for e, c in self.terms.items() if e[i] == 0}, self.unit)

    def exp(self) -> "TimePoly":
        """exp of a series without constant term."""
        if not ring_is_zero(self.constant()):
            raise ValueError("exp needs a vanishing constant term")
        result = self.one_like()
        power = self.one_like()
        for k in range(1, self.cap + 1):
            power = power * self
            result = result + power.scale(Fraction(1, factorial(k)))
        return result

    def log(self) -> "TimePoly":
        """log of a series with constant term 1."""
        if not ring_is_one(self.constant()):
            raise ValueError("log needs constant term one")
        y = self - self.one_like()
        result = self.zero_like()
        power = self.one_like()
        for k in range(1, self.cap + 1):
            power = power * y
            result = result + power.scale(Fraction((-1) ** (k + 1), k))
        return result

    def map_coeffs(self, fn) -> "TimePoly":
        out = {e: fn(c) for e, c in self.terms.items()}
        unit = fn(self.unit)
        return TimePoly(self.variables, self.cap, out, unit)

    # --- display ---
    def monomial_str(self, e: Exps) -> str:
        parts = []
        for v, k in zip(self.variables, e):
            if k == 1:
                parts.append(str(v))
            elif k:
                parts.append(f"{v}^{k}")
        return "*".join(parts) or "1"

    def first_nonzero(self) -> tuple[Exps, Any] | None:
        if not self.terms:
            return None
        e = min(self.terms, key=lambda ex: (sum(ex), ex))
        return e, self.terms[e]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimePoly):
            return NotImplemented
        return self.variables == other.variables and self.cap == other.cap and (self - other).is_zero()

    def __hash__(self) -> int:
        return hash((self.variables, self.cap, len(self.terms)))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda ec: (sum(ec[0]), ec[0]))
        return " + ".join(f"({c})*{self.monomial_str(e)}" for e, c in items)

    def __repr__(self) -> str:
        return f"TimePoly({self})"


def time_arith(a: TimePoly, b: TimePoly, op: str) -> TimePoly:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def lift(x: Any, variables: Iterable[Variable], cap: int) -> TimePoly:
    """Promote a coefficient (or re-embed a TimePoly) into the given variable list."""
    variables = tuple(variables)
    if isinstance(x, TimePoly):
        return x.embed(variables).with_cap(cap)
    return TimePoly.const(variables, cap, x)
