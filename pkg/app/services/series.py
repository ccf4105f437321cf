"""
Laurent series in the spectral parameter lambda, and time-shift sequences.

A ``LambdaSeries`` knows its coefficients exactly on a window [lo, hi]; each
end is either exact (everything beyond is zero) or truncated (unknown). The
same conservative window rule is used for operator products in ``oper``.
An optional part proportional to l = log(lambda) is carried with l^2 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Mapping

from app.services.params import L_FAMILY, R_FAMILY, FlowIndex, Params, flow_family, power_exponent, shift_coefficient
from app.services.ring import ring_derive, ring_inverse, ring_is_zero, ring_one_like, ring_scale, ring_shift, ring_zero_like
from app.services.timeseries import SpectralVar, TimePoly
from app.utils.errors import EmptyWindow, WindowOverflow

Window = tuple  # (lo, hi, lo_exact, hi_exact)


def is_zero_window(w: Window) -> bool:
    lo, hi, lox, hix = w
    return lo > hi and lox and hix


def product_window(a: Window, b: Window) -> Window:
    """
    Largest window on which every coefficient of a product is exact.

    A truncated lower end on one factor needs an exact upper end on the other
    (and symmetrically); the result end is exact only if both input ends are.
    """
    alo, ahi, alx, ahx = a
    blo, bhi, blx, bhx = b
    if alx and blx:
        lo, lox = alo + blo, True
    else:
        bounds = []
        if not alx:
            if not bhx:
                raise EmptyWindow("two lower-truncated factors with open upper tails")
            bounds.append(alo + bhi)
        if not blx:
            if not ahx:
                raise EmptyWindow("two lower-truncated factors with open upper tails")
            bounds.append(blo + ahi)
        lo, lox = max(bounds), False
    if ahx and bhx:
        hi, hix = ahi + bhi, True
    else:
        bounds = []
        if not ahx:
            if not blx:
                raise EmptyWindow("two upper-truncated factors with open lower tails")
            bounds.append(ahi + blo)
        if not bhx:
            if not alx:
                raise EmptyWindow("two upper-truncated factors with open lower tails")
            bounds.append(bhi + alo)
        hi, hix = min(bounds), False
    if lo > hi and not (lox and hix):
        raise EmptyWindow(f"no exact coefficient left (window [{lo}, {hi}])")
    return lo, hi, lox, hix


class LambdaSeries:
    """sum_k (c_k + l*d_k) lambda^k on a window with per-end tail flags."""

    __slots__ = ("coeffs", "log_coeffs", "lo", "hi", "lo_exact", "hi_exact", "unit")

    def __init__(
        self,
        coeffs: Mapping[int, Any],
        lo: int,
        hi: int,
        lo_exact: bool,
        hi_exact: bool,
        unit: Any,
        log_coeffs: Mapping[int, Any] | None = None,
    ):
        self.lo, self.hi = lo, hi
        self.lo_exact, self.hi_exact = lo_exact, hi_exact
        self.unit = ring_one_like(unit)
        self.coeffs = {k: c for k, c in coeffs.items() if lo <= k <= hi and not ring_is_zero(c)}
        self.log_coeffs = {
            k: c for k, c in (log_coeffs or {}).items() if lo <= k <= hi and not ring_is_zero(c)
        }

    # --- construction ---
    @classmethod
    def monomial(cls, k: int, c: Any) -> "LambdaSeries":
        return cls({k: c}, k, k, True, True, c)

    @classmethod
    def zero(cls, unit: Any) -> "LambdaSeries":
        return cls({}, 0, -1, True, True, unit)

    @property
    def window(self) -> Window:
        return (self.lo, self.hi, self.lo_exact, self.hi_exact)

    def zero_coeff(self) -> Any:
        return ring_zero_like(self.unit)

    def is_zero_series(self) -> bool:
        return not self.coeffs and not self.log_coeffs

    def coefficient(self, k: int, log: bool = False) -> Any:
        table = self.log_coeffs if log else self.coeffs
        if self.lo <= k <= self.hi:
            return table.get(k, self.zero_coeff())
        if (k < self.lo and self.lo_exact) or (k > self.hi and self.hi_exact):
            return self.zero_coeff()
        raise WindowOverflow(f"lambda^{k} is outside the exact window [{self.lo}, {self.hi}]")

    def residue(self) -> Any:
        """Res sum a_n lambda^n = a_{-1}."""
        return self.coefficient(-1)

    # --- arithmetic ---
    def _combine(self, other: "LambdaSeries", sign: int) -> "LambdaSeries":
        if self.lo_exact and other.lo_exact:
            lo, lox = min(self.lo, other.lo), True
        elif self.lo_exact:
            lo, lox = other.lo, False
        elif other.lo_exact:
            lo, lox = self.lo, False
        else:
            lo, lox = max(self.lo, other.lo), False
        if self.hi_exact and other.hi_exact:
            hi, hix = max(self.hi, other.hi), True
        elif self.hi_exact:
            hi, hix = other.hi, False
        elif other.hi_exact:
            hi, hix = self.hi, False
        else:
            hi, hix = min(self.hi, other.hi), False
        if self.is_zero_series() and is_zero_window(self.window):
            lo, hi, lox, hix = other.window
        elif other.is_zero_series() and is_zero_window(other.window):
            lo, hi, lox, hix = self.window

        def merged(a: Mapping[int, Any], b: Mapping[int, Any]) -> dict[int, Any]:
            out = {k: v for k, v in a.items() if lo <= k <= hi}
            for k, v in b.items():
                if lo <= k <= hi:
                    v = v if sign > 0 else -v
                    out[k] = out[k] + v if k in out else v
            return out

        return LambdaSeries(
            merged(self.coeffs, other.coeffs), lo, hi, lox, hix, self.unit,
            merged(self.log_coeffs, other.log_coeffs),
        )

    def __add__(self, other: "LambdaSeries") -> "LambdaSeries":
        return self._combine(other, 1)

    def __sub__(self, other: "LambdaSeries") -> "LambdaSeries":
        return self._combine(other, -1)

    def __neg__(self) -> "LambdaSeries":
        return self.map_coeffs(lambda c: -c)

    def __mul__(self, other: Any) -> "LambdaSeries":
        if not isinstance(other, LambdaSeries):
            return self.map_coeffs(lambda c: c * other)
        if is_zero_window(self.window) or is_zero_window(other.window):
            return LambdaSeries.zero(self.unit)
        lo, hi, lox, hix = product_window(self.window, other.window)

        def conv(a: Mapping[int, Any], b: Mapping[int, Any]) -> dict[int, Any]:
            out: dict[int, Any] = {}
            for i, ca in a.items():
                for j, cb in b.items():
                    k = i + j
                    if lo <= k <= hi:
                        prod = ca * cb
                        out[k] = out[k] + prod if k in out else prod
            return out

        main = conv(self.coeffs, other.coeffs)
        log = conv(self.coeffs, other.log_coeffs)
        for k, v in conv(self.log_coeffs, other.coeffs).items():
            log[k] = log[k] + v if k in log else v
        return LambdaSeries(main, lo, hi, lox, hix, self.unit, log)

    def __rmul__(self, other: Any) -> "LambdaSeries":
        return self.map_coeffs(lambda c: other * c)

    def scale(self, c: Any) -> "LambdaSeries":
        return self.map_coeffs(lambda v: ring_scale(v, c))

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "LambdaSeries":
        return LambdaSeries(
            {k: fn(c) for k, c in self.coeffs.items()},
            self.lo, self.hi, self.lo_exact, self.hi_exact, fn(self.unit),
            {k: fn(c) for k, c in self.log_coeffs.items()},
        )

    def times_power(self, p: int) -> "LambdaSeries":
        """Multiply by lambda^p."""
        return LambdaSeries(
            {k + p: c for k, c in self.coeffs.items()},
            self.lo + p, self.hi + p, self.lo_exact, self.hi_exact, self.unit,
            {k + p: c for k, c in self.log_coeffs.items()},
        )

    def shift_x(self, k: int) -> "LambdaSeries":
        """Evaluate every coefficient at x + k*eps."""
        return self.map_coeffs(lambda c: ring_shift(c, k))

    def derive_x(self) -> "LambdaSeries":
        return self.map_coeffs(ring_derive)

    def derive_lambda(self) -> "LambdaSeries":
        """d/d lambda of the l-free part."""
        if self.log_coeffs:
            raise ValueError("d/d lambda of a log lambda part is not a Laurent series")
        return LambdaSeries(
            {k - 1: ring_scale(c, k) for k, c in self.coeffs.items() if k},
            self.lo - 1, self.hi - 1, self.lo_exact, self.hi_exact, self.unit,
        )

    def restrict(self, lo: int, hi: int) -> "LambdaSeries":
        """Keep [lo, hi] ∩ window; ends cut inside the window become truncated."""
        nlo, nhi = max(lo, self.lo), min(hi, self.hi)
        return LambdaSeries(
            self.coeffs, nlo, nhi,
            self.lo_exact and nlo == self.lo, self.hi_exact and nhi == self.hi,
            self.unit, self.log_coeffs,
        )

    # --- one-sided functions ---
    def _one_sided_powers(self, y: "LambdaSeries", count: int) -> list["LambdaSeries"]:
        powers = [LambdaSeries.monomial(0, self.unit)]
        for _ in range(count):
            powers.append(powers[-1] * y)
        return powers

    def inverse_unit(self) -> "LambdaSeries":
        """1/s for a one-sided series with invertible lambda^0 coefficient."""
        c0 = self.coefficient(0)
        c0inv = ring_inverse(c0)
        y = self.map_coeffs(lambda c: c * c0inv) - LambdaSeries.monomial(0, self.unit)
        depth = self._depth()
        total = LambdaSeries.monomial(0, self.unit)
        power = LambdaSeries.monomial(0, self.unit)
        for _ in range(depth):
            power = power * (-y)
            total = total + power
        return total.map_coeffs(lambda c: c * c0inv)

    def log_unit(self) -> "LambdaSeries":
        """log s for a one-sided series with lambda^0 coefficient one."""
        y = self - LambdaSeries.monomial(0, self.unit)
        total = LambdaSeries.zero(self.unit)
        power = LambdaSeries.monomial(0, self.unit)
        for k in range(1, self._depth() + 1):
            power = power * y
            total = total + power.scale(Fraction((-1) ** (k + 1), k))
        return total

    def _depth(self) -> int:
        if self.hi <= 0 and self.hi_exact:
            return -self.lo
        if self.lo >= 0 and self.lo_exact:
            return self.hi
        raise ValueError("series is not one-sided")

    def exp_nilpotent(self, order: int) -> "LambdaSeries":
        """exp of a series whose coefficients are nilpotent (time series without constant term)."""
        total = LambdaSeries.monomial(0, self.unit)
        power = LambdaSeries.monomial(0, self.unit)
        for k in range(1, order + 1):
            power = power * self
            total = total + power.scale(Fraction(1, factorial(k)))
        return total

    def is_zero(self) -> bool:
        return all(ring_is_zero(c) for c in self.coeffs.values()) and all(
            ring_is_zero(c) for c in self.log_coeffs.values()
        )

    def __str__(self) -> str:
        parts = [f"({c})*lambda^{k}" for k, c in sorted(self.coeffs.items())]
        parts += [f"({c})*l*lambda^{k}" for k, c in sorted(self.log_coeffs.items())]
        tail = f" [{self.lo}{'' if self.lo_exact else '~'}, {self.hi}{'' if self.hi_exact else '~'}]"
        return (" + ".join(parts) or "0") + tail


# --- time-shift sequences ---

NSEQ = "NSeq"
MSEQ = "MSeq"


@dataclass(frozen=True)
class TimeShiftSequence:
    """
    [lambda^{-1}]^N (``NSeq``) or [lambda]^M (``MSeq``), with a sign.

    NSeq has entries only on the L family, MSeq only on the R family; both
    vanish on the log times.
    """

    kind: str
    sign: int = 1

    def entry(self, p: Params, f: FlowIndex) -> tuple[Fraction, int] | None:
        """(coefficient of eps, lambda-order e) of the entry on t_f, or None."""
        family = flow_family(p, f)
        if (self.kind == NSEQ and family != L_FAMILY) or (self.kind == MSEQ and family != R_FAMILY):
            return None
        return self.sign * shift_coefficient(p, f) * p.eps, power_exponent(p, f)

    def offsets(self, p: Params, variables, cap: int, spectral: SpectralVar, unit: Any = Fraction(1)) -> dict:
        """t_f -> sign*c_f*eps*mu^{e_f} for every active time with a non-zero entry."""
        out = {}
        for v in variables:
            if not isinstance(v, FlowIndex):
                continue
            ent = self.entry(p, v)
            if ent is None:
                continue
            coeff, e = ent
            mu = TimePoly.var(variables, cap, spectral, unit)
            out[v] = (mu ** e).scale(coeff)
        return out


def spectral_shift(f: TimePoly, seq: TimeShiftSequence, p: Params, spectral: SpectralVar) -> TimePoly:
    """f(t + s(mu)) with mu = lambda^{-1} (NSeq) or lambda (MSeq) as a spectral variable of f."""
    if spectral not in f.variables:
        f = f.embed(f.variables + (spectral,))
    offsets = seq.offsets(p, f.variables, f.cap, spectral, f.unit)
    images = {v: TimePoly.var(f.variables, f.cap, v, f.unit) + off for v, off in offsets.items()}
    return f.substitute(images) if images else f


def substitute_time_shift(f: TimePoly, seq: TimeShiftSequence, p: Params, order: int) -> LambdaSeries:
    """
    f(t ± s(lambda)) as a lambda-series with TimePoly coefficients.

    The coefficient of lambda^{-k} (NSeq) or lambda^{k} (MSeq) is exact through
    time degree D - k, so orders beyond D are refused.
    """
    if order > f.cap:
        raise WindowOverflow(f"lambda-order {order} exceeds what cap D={f.cap} determines")
    mu = SpectralVar("mu")
    shifted = spectral_shift(f, seq, p, mu)
    return from_spectral(shifted, mu, f.variables, order, lower=seq.kind == NSEQ)


def from_spectral(g: TimePoly, mu: SpectralVar, variables, order: int, lower: bool) -> LambdaSeries:
    """Read mu-powers of g as lambda^{-k} (lower) or lambda^{k}; coefficients live in ``variables``."""
    i = g.index(mu)
    variables = tuple(variables)
    pos = [g.variables.index(v) for v in variables]
    buckets: dict[int, dict] = {}
    for e, c in g.terms.items():
        k = e[i]
        if k > order:
            continue
        if any(e[j] for j in range(len(e)) if j != i and j not in pos):
            raise WindowOverflow("spectral series depends on variables outside the target list")
        ne = tuple(e[j] for j in pos)
        bucket = buckets.setdefault(k, {})
        bucket[ne] = bucket[ne] + c if ne in bucket else c
    coeffs = {(-k if lower else k): TimePoly(variables, g.cap, terms, g.unit) for k, terms in buckets.items()}
    unit = TimePoly.const(variables, g.cap, g.unit)
    if lower:
        return LambdaSeries(coeffs, -order, 0, False, True, unit)
    return LambdaSeries(coeffs, 0, order, True, False, unit)
