"""
Difference-operator algebra.

``LambdaOp`` is a truncated two-sided series sum_k a_k Lambda^k (coefficients
on the left) plus an optional scalar multiple of eps*d/dx. Multiplication
uses Lambda^k a = S^k(a) Lambda^k and (eps d) a = eps a' + a (eps d).

Window bookkeeping is conservative: a coefficient is reported only when
every contribution to it is known, see ``series.product_window``.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Any, Callable, Mapping

from app.services.lattice import LatticeFn
from app.services.ring import (
    CoeffPoly,
    rat,
    ring_derive,
    ring_inverse,
    ring_is_one,
    ring_is_zero,
    ring_one_like,
    ring_scale,
    ring_shift,
    ring_zero_like,
)
from app.services.series import LambdaSeries, Window, is_zero_window, product_window
from app.services.timeseries import TimePoly
from app.utils.errors import (
    AmbiguousTail,
    DpartUnsupported,
    EmptyWindow,
    NotInvertible,
    WindowOverflow,
    WindowTooSmall,
)

logger = logging.getLogger(__name__)

MONIC_LOWER = "monicLower"
UNIT_UPPER = "unitUpper"


class LambdaOp:
    __slots__ = ("coeffs", "lo", "hi", "lo_exact", "hi_exact", "dpart", "unit", "eps")

    def __init__(
        self,
        coeffs: Mapping[int, Any],
        lo: int,
        hi: int,
        lo_exact: bool,
        hi_exact: bool,
        unit: Any,
        dpart: Any = 0,
        eps: Any = 1,
    ):
        self.lo, self.hi = lo, hi
        self.lo_exact, self.hi_exact = lo_exact, hi_exact
        self.unit = ring_one_like(unit)
        self.dpart = rat(dpart)
        self.eps = rat(eps)
        self.coeffs = {k: c for k, c in coeffs.items() if lo <= k <= hi and not ring_is_zero(c)}

    # --- construction ---
    @classmethod
    def shift_power(cls, k: int, unit: Any, eps: Any = 1) -> "LambdaOp":
        """Lambda^k."""
        return cls({k: ring_one_like(unit)}, k, k, True, True, unit, eps=eps)

    @classmethod
    def identity(cls, unit: Any, eps: Any = 1) -> "LambdaOp":
        return cls.shift_power(0, unit, eps)

    @classmethod
    def const(cls, c: Any, eps: Any = 1) -> "LambdaOp":
        """Multiplication by the coefficient c."""
        return cls({0: c}, 0, 0, True, True, c, eps=eps)

    @classmethod
    def zero(cls, unit: Any, eps: Any = 1) -> "LambdaOp":
        return cls({}, 0, -1, True, True, unit, eps=eps)

    @classmethod
    def eps_d(cls, c: Any, unit: Any, eps: Any = 1) -> "LambdaOp":
        """c * eps * d/dx."""
        return cls({}, 0, -1, True, True, unit, dpart=c, eps=eps)

    @property
    def window(self) -> Window:
        return (self.lo, self.hi, self.lo_exact, self.hi_exact)

    def _like(self, coeffs: Mapping[int, Any], window: Window, dpart: Any = 0) -> "LambdaOp":
        lo, hi, lox, hix = window
        return LambdaOp(coeffs, lo, hi, lox, hix, self.unit, dpart, self.eps)

    def coefficient(self, k: int) -> Any:
        if self.lo <= k <= self.hi:
            return self.coeffs.get(k, ring_zero_like(self.unit))
        if (k < self.lo and self.lo_exact) or (k > self.hi and self.hi_exact):
            return ring_zero_like(self.unit)
        raise WindowOverflow(f"Lambda^{k} is outside the exact window [{self.lo}, {self.hi}]")

    def is_zero(self) -> bool:
        return self.dpart == 0 and all(ring_is_zero(c) for c in self.coeffs.values())

    def is_zero_op(self) -> bool:
        return self.dpart == 0 and not self.coeffs and is_zero_window(self.window)

    def first_nonzero(self) -> tuple[int, Any] | None:
        for k in sorted(self.coeffs, reverse=True):
            if not ring_is_zero(self.coeffs[k]):
                return k, self.coeffs[k]
        return None

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "LambdaOp":
        return LambdaOp(
            {k: fn(c) for k, c in self.coeffs.items()},
            self.lo, self.hi, self.lo_exact, self.hi_exact, fn(self.unit), self.dpart, self.eps,
        )

    def restrict(self, lo: int, hi: int) -> "LambdaOp":
        """Keep [lo, hi] of the window; ends cut inside become truncated."""
        nlo, nhi = max(lo, self.lo), min(hi, self.hi)
        if nlo > nhi:
            raise EmptyWindow(f"restriction to [{lo}, {hi}] leaves nothing of [{self.lo}, {self.hi}]")
        return LambdaOp(
            self.coeffs, nlo, nhi, self.lo_exact and nlo == self.lo, self.hi_exact and nhi == self.hi,
            self.unit, self.dpart, self.eps,
        )

    # --- arithmetic sugar ---
    def __add__(self, other: "LambdaOp") -> "LambdaOp":
        return op_add(self, other)

    def __sub__(self, other: "LambdaOp") -> "LambdaOp":
        return op_add(self, op_scale(other, -1))

    def __neg__(self) -> "LambdaOp":
        return op_scale(self, -1)

    def __mul__(self, other: Any) -> "LambdaOp":
        if isinstance(other, LambdaOp):
            return op_mul(self, other)
        return op_scale(self, other)

    def __rmul__(self, other: Any) -> "LambdaOp":
        return op_scale(self, other)

    def __str__(self) -> str:
        parts = [f"({c})*L^{k}" for k, c in sorted(self.coeffs.items(), reverse=True)]
        if self.dpart:
            parts.append(f"{self.dpart}*eps*d")
        tail = f" [{self.lo}{'' if self.lo_exact else '~'}, {self.hi}{'' if self.hi_exact else '~'}]"
        return (" + ".join(parts) or "0") + tail

    def __repr__(self) -> str:
        return f"LambdaOp({self})"


def sum_window(a: Window, b: Window) -> Window:
    if is_zero_window(a):
        return b
    if is_zero_window(b):
        return a
    alo, ahi, alx, ahx = a
    blo, bhi, blx, bhx = b
    if alx and blx:
        lo, lox = min(alo, blo), True
    elif alx:
        lo, lox = blo, False
    elif blx:
        lo, lox = alo, False
    else:
        lo, lox = max(alo, blo), False
    if ahx and bhx:
        hi, hix = max(ahi, bhi), True
    elif ahx:
        hi, hix = bhi, False
    elif bhx:
        hi, hix = ahi, False
    else:
        hi, hix = min(ahi, bhi), False
    if lo > hi and not (lox and hix):
        raise EmptyWindow(f"sum has no exact coefficient (window [{lo}, {hi}])")
    return lo, hi, lox, hix


def _check_eps(a: LambdaOp, b: LambdaOp) -> None:
    if a.eps != b.eps:
        raise ValueError(f"operators built with different eps ({a.eps} vs {b.eps})")


def op_add(a: LambdaOp, b: LambdaOp) -> LambdaOp:
    _check_eps(a, b)
    window = sum_window(a.window, b.window)
    lo, hi = window[0], window[1]
    out = {k: c for k, c in a.coeffs.items() if lo <= k <= hi}
    for k, c in b.coeffs.items():
        if lo <= k <= hi:
            out[k] = out[k] + c if k in out else c
    return a._like(out, window, a.dpart + b.dpart)


def op_sub(a: LambdaOp, b: LambdaOp) -> LambdaOp:
    return op_add(a, op_scale(b, -1))


def op_scale(a: LambdaOp, c: Any) -> LambdaOp:
    """Multiply by an exact rational."""
    c = rat(c)
    return LambdaOp(
        {k: ring_scale(v, c) for k, v in a.coeffs.items()},
        a.lo, a.hi, a.lo_exact, a.hi_exact, a.unit, a.dpart * c, a.eps,
    )


def _strip(a: LambdaOp) -> LambdaOp:
    return LambdaOp(a.coeffs, a.lo, a.hi, a.lo_exact, a.hi_exact, a.unit, 0, a.eps)


def _mul0(a: LambdaOp, b: LambdaOp) -> LambdaOp:
    """Product of the eps*d-free parts."""
    if is_zero_window(a.window) or is_zero_window(b.window):
        return LambdaOp.zero(a.unit, a.eps)
    window = product_window(a.window, b.window)
    lo, hi = window[0], window[1]
    shifted: dict[tuple[int, int], Any] = {}
    out: dict[int, Any] = {}
    for i, ai in a.coeffs.items():
        for j, bj in b.coeffs.items():
            k = i + j
            if not lo <= k <= hi:
                continue
            key = (i, j)
            if key not in shifted:
                shifted[key] = ring_shift(bj, i)
            prod = ai * shifted[key]
            out[k] = out[k] + prod if k in out else prod
    return a._like(out, window)


def derive_op(a: LambdaOp) -> LambdaOp:
    """Coefficientwise x-derivative (the constant eps*d part differentiates to zero)."""
    return LambdaOp(
        {k: ring_derive(c) for k, c in a.coeffs.items()},
        a.lo, a.hi, a.lo_exact, a.hi_exact, a.unit, 0, a.eps,
    )


def op_mul_split(a: LambdaOp, b: LambdaOp) -> tuple[LambdaOp, LambdaOp]:
    """
    a o b = P + Q o (eps d) with P, Q free of eps*d.

    (A0 + a eps d)(B0 + b eps d) = A0 B0 + a eps B0' + (b A0 + a B0) eps d + ab eps^2 d^2.
    """
    _check_eps(a, b)
    if a.dpart and b.dpart:
        raise DpartUnsupported("eps^2 d^2 terms are not representable")
    a0, b0 = _strip(a), _strip(b)
    p = _mul0(a0, b0)
    q = LambdaOp.zero(a.unit, a.eps)
    if a.dpart:
        p = op_add(p, op_scale(derive_op(b0), a.dpart * a.eps))
        q = op_add(q, op_scale(b0, a.dpart))
    if b.dpart:
        q = op_add(q, op_scale(a0, b.dpart))
    return p, q


def as_scalar(c: Any) -> Fraction | None:
    """The rational value of an x- and t-independent coefficient, else None."""
    if isinstance(c, Fraction):
        return c
    if isinstance(c, CoeffPoly):
        return c.constant_term() if set(c.terms) <= {()} else None
    if isinstance(c, LatticeFn):
        return c.jets[0][0] if c.is_const else None
    if isinstance(c, TimePoly):
        if set(c.terms) - {c.zero_exps()}:
            return None
        return as_scalar(c.constant()) if c.terms else Fraction(0)
    return None


def op_mul(a: LambdaOp, b: LambdaOp) -> LambdaOp:
    p, q = op_mul_split(a, b)
    if not q.coeffs:
        return p
    scalar = as_scalar(q.coeffs.get(0)) if set(q.coeffs) == {0} and q.lo_exact and q.hi_exact else None
    if scalar is None:
        raise DpartUnsupported("product has a non-constant eps*d coefficient; use op_mul_split")
    return LambdaOp(p.coeffs, p.lo, p.hi, p.lo_exact, p.hi_exact, p.unit, scalar, p.eps)


def op_power(a: LambdaOp, k: int) -> LambdaOp:
    if k < 0:
        raise ValueError("negative powers need invert()")
    result = LambdaOp.identity(a.unit, a.eps)
    for _ in range(k):
        result = op_mul(result, a)
    return result


def commutator(a: LambdaOp, b: LambdaOp) -> LambdaOp:
    """[A0 + a eps d, B0 + b eps d] = [A0, B0] + eps (a B0' - b A0'), exactly."""
    _check_eps(a, b)
    a0, b0 = _strip(a), _strip(b)
    out = op_sub(_mul0(a0, b0), _mul0(b0, a0))
    if a.dpart:
        out = op_add(out, op_scale(derive_op(b0), a.dpart * a.eps))
    if b.dpart:
        out = op_sub(out, op_scale(derive_op(a0), b.dpart * a.eps))
    return out


def project(a: LambdaOp, sign: str) -> LambdaOp:
    """
    ``plus`` keeps Lambda^{k>=0} and the eps*d part, ``minus`` keeps k < 0.
    """
    if sign == "plus":
        if a.hi < 0:
            if not a.hi_exact:
                raise AmbiguousTail("kept side k >= 0 lies entirely in a truncated tail")
            return LambdaOp.eps_d(a.dpart, a.unit, a.eps)
        if a.lo > 0 and not a.lo_exact:
            raise AmbiguousTail(f"truncated lower tail at {a.lo} hides coefficients with k >= 0")
        lo = max(a.lo, 0)
        return a._like({k: c for k, c in a.coeffs.items() if k >= 0}, (lo, a.hi, True, a.hi_exact), a.dpart)
    if sign == "minus":
        if a.lo > -1:
            if not a.lo_exact:
                raise AmbiguousTail("kept side k < 0 lies entirely in a truncated tail")
            return LambdaOp.zero(a.unit, a.eps)
        if a.hi < -1 and not a.hi_exact:
            raise AmbiguousTail(f"truncated upper tail at {a.hi} hides coefficients with k < 0")
        hi = min(a.hi, -1)
        return a._like({k: c for k, c in a.coeffs.items() if k < 0}, (a.lo, hi, a.lo_exact, True))
    raise ValueError(f"projection sign must be 'plus' or 'minus', got {sign!r}")


def sharp(a: LambdaOp) -> LambdaOp:
    """Antiautomorphism fixing x, Lambda -> Lambda^{-1}: (a_k Lambda^k)^# = S^{-k}(a_k) Lambda^{-k}."""
    if a.dpart:
        raise DpartUnsupported("the antiinvolution is not applied to eps*d terms")
    out = {-k: ring_shift(c, -k) for k, c in a.coeffs.items()}
    return a._like(out, (-a.hi, -a.lo, a.hi_exact, a.lo_exact))


def invert(a: LambdaOp, kind: str, depth: int | None = None) -> LambdaOp:
    """
    Inverse of a normalized one-sided series.

    ``monicLower``: 1 + sum_{k>=1} a_{-k} Lambda^{-k}; ``unitUpper``:
    sum_{k>=0} a_k Lambda^k with invertible a_0. ``depth`` defaults to the
    exactly known depth of a truncated input and is required for exact
    (finite) inputs, whose inverse is an infinite series.
    """
    if a.dpart:
        raise NotInvertible("operators with an eps*d part are not inverted")
    if kind == MONIC_LOWER:
        if any(k > 0 for k in a.coeffs) or (a.hi > 0 and not a.hi_exact) or a.hi < 0:
            raise NotInvertible("monicLower inversion needs support in k <= 0 with a known Lambda^0 term")
        if not ring_is_one(a.coefficient(0)):
            raise NotInvertible("monicLower inversion needs Lambda^0 coefficient 1")
        known = -a.lo if not a.lo_exact else None
        sign = -1
    elif kind == UNIT_UPPER:
        if any(k < 0 for k in a.coeffs) or (a.lo < 0 and not a.lo_exact) or a.lo > 0:
            raise NotInvertible("unitUpper inversion needs support in k >= 0 with a known Lambda^0 term")
        known = a.hi if not a.hi_exact else None
        sign = 1
    else:
        raise ValueError(f"unknown inversion kind {kind!r}")
    if depth is None:
        if known is None:
            raise WindowTooSmall("an exact finite operator has an infinite inverse; pass depth")
        depth = known
    if known is not None and depth > known:
        raise WindowTooSmall(f"inverse to depth {depth} needs the input known to depth {depth}, have {known}")

    a0 = a.coefficient(0)
    try:
        a0inv = ring_inverse(a0)
    except Exception as exc:
        raise NotInvertible(f"Lambda^0 coefficient {a0} is not invertible") from exc
    x: dict[int, Any] = {0: a0inv}
    # a0 x_k + sum_{i=1}^{k} a_{si} S^{si}(x_{s(k-i)}) = 0, s = sign
    for k in range(1, depth + 1):
        total = ring_zero_like(a.unit)
        for i in range(1, k + 1):
            ai = a.coefficient(sign * i)
            if ring_is_zero(ai):
                continue
            total = total + ai * ring_shift(x[sign * (k - i)], sign * i)
        x[sign * k] = -(a0inv * total)
    if sign < 0:
        return a._like(x, (-depth, 0, False, True))
    return a._like(x, (0, depth, True, False))


def to_right(a: LambdaOp) -> dict[int, Any]:
    """Coefficients b_k of the right-oriented form sum_k Lambda^k b_k."""
    return {k: ring_shift(c, -k) for k, c in a.coeffs.items()}


def from_right(b: Mapping[int, Any], window: Window, unit: Any, eps: Any = 1) -> LambdaOp:
    """Build sum_k Lambda^k b_k; stored coefficient-left as S^k(b_k) Lambda^k."""
    lo, hi, lox, hix = window
    return LambdaOp({k: ring_shift(c, k) for k, c in b.items()}, lo, hi, lox, hix, unit, 0, eps)


def _symbol_window(a: LambdaOp, lo: int | None, hi: int | None) -> Window:
    lo = a.lo if lo is None else lo
    hi = a.hi if hi is None else hi
    if (lo < a.lo and not a.lo_exact) or (hi > a.hi and not a.hi_exact):
        raise WindowOverflow(f"symbol window [{lo}, {hi}] exceeds exact window [{a.lo}, {a.hi}]")
    lox = a.lo_exact and lo <= a.lo
    hix = a.hi_exact and hi >= a.hi
    return lo, hi, lox, hix


def left_symbol(a: LambdaOp, lo: int | None = None, hi: int | None = None) -> LambdaSeries:
    """sum a_k lambda^k of the coefficient-left form."""
    if a.dpart:
        raise DpartUnsupported("symbols are taken of eps*d-free operators")
    wlo, whi, lox, hix = _symbol_window(a, lo, hi)
    return LambdaSeries(dict(a.coeffs), wlo, whi, lox, hix, a.unit)


def right_symbol(a: LambdaOp, lo: int | None = None, hi: int | None = None) -> LambdaSeries:
    """sum b_k lambda^k of the coefficient-right form, i.e. P^#(lambda^{-x/eps}) lambda^{x/eps}."""
    if a.dpart:
        raise DpartUnsupported("symbols are taken of eps*d-free operators")
    wlo, whi, lox, hix = _symbol_window(a, lo, hi)
    return LambdaSeries(to_right(a), wlo, whi, lox, hix, a.unit)


def residue_lambda(s: LambdaSeries) -> Any:
    return s.residue()


def residue_op(a: LambdaOp) -> Any:
    """Coefficient of Lambda^{-1}."""
    return a.coefficient(-1)
