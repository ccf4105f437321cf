"""
Hirota bilinear identities on the wave-operator symbols.

P_L and P_R are read in coefficient-left form, P_L^{-1} and P_R^{-1} in
coefficient-right form. With that pairing the product P_L(x) P_L^{-1}(x - m eps)
has as lambda^{-k} coefficient the Lambda^{-m} coefficient of
P_L Lambda^{k-m} P_L^{-1}, which is what turns operator identities into the
residue identities checked here.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from math import factorial
from typing import Any, Mapping, NamedTuple, Sequence

from app.models import Report
from app.services.flows import (
    WINDOW_ERRORS,
    EvolvedState,
    needs_degree,
    pair_of,
    time_derivative,
)
from app.services.lax import DressingPair, root_power
from app.services.oper import left_symbol, right_symbol
from app.services.params import (
    L_FAMILY,
    LOG_FAMILY,
    R_FAMILY,
    FlowIndex,
    Params,
    flow_family,
    gamma_ratio,
    log_constant,
    power_exponent,
)
from app.services.residual import check_report
from app.services.ring import ring_one_like, ring_shift
from app.services.series import LambdaSeries
from app.services.timeseries import SpectralVar, TimePoly, Variable, lift
from app.utils.errors import InactiveTime, WindowExhausted

logger = logging.getLogger(__name__)

VARIANTS = (
    "offset-a", "offset-b", "offset-c", "offset-d",
    "two-point-a", "two-point-b", "two-point-c", "two-point-d",
)

# which flow family each differentiated variant belongs to
_VARIANT_FAMILY = {"a": L_FAMILY, "b": R_FAMILY, "c": LOG_FAMILY}


class Symbols(NamedTuple):
    PL: LambdaSeries
    PLinv: LambdaSeries
    PR: LambdaSeries
    PRinv: LambdaSeries


def symbols(s: EvolvedState | DressingPair) -> Symbols:
    """Left symbols of P_L, P_R and right symbols of their inverses."""
    d = pair_of(s)
    return Symbols(left_symbol(d.pL), right_symbol(d.pL_inv), left_symbol(d.pR), right_symbol(d.pR_inv))


def ring_unit(series: LambdaSeries) -> Any:
    """Base-ring one under a series whose coefficients may be TimePolys."""
    unit = series.unit
    return unit.unit if isinstance(unit, TimePoly) else unit


def spectral_symbol(
    sym: LambdaSeries, mu: SpectralVar, variables: Sequence[Variable], cap: int, lower: bool
) -> TimePoly:
    """
    sum_k c_k mu^k with mu = lambda^{-1} (``lower``, P_L side) or lambda (P_R side).

    Only |k| <= cap survives the total-degree cap, so the symbol must be known
    that far.
    """
    unit = ring_unit(sym)
    mu_poly = TimePoly.var(variables, cap, mu, unit)
    total = TimePoly(variables, cap, {}, unit)
    power = total.one_like()
    for j in range(cap + 1):
        total = total + lift(sym.coefficient(-j if lower else j), variables, cap) * power
        power = power * mu_poly
    return total


def check_conjugation_family(s: EvolvedState | DressingPair, r: int) -> Report:
    """P_L Lambda^{Nr} P_L^{-1} = P_R Lambda^{-Mr} P_R^{-1} on the common window."""
    if r < 0:
        raise ValueError("r must be a natural number")
    d = pair_of(s)
    identity = f"conjugation[r={r}]"
    try:
        left = root_power(d, d.params.N * r, "left")
        right = root_power(d, d.params.M * r, "right")
        residual = left - right
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"{identity}: {exc}") from exc
    return check_report(identity, [("left - right conjugation", residual)])


def _integrands(
    p: Params,
    kind: str,
    f: FlowIndex | None,
    sym: Symbols,
    dsym: tuple[LambdaSeries, LambdaSeries] | None,
    a: int,
    b: int,
) -> tuple[LambdaSeries, LambdaSeries]:
    """Both sides before the lambda-power and residue: unprimed symbols at x + a, primed at x + b."""
    pl, pl_inv = sym.PL.shift_x(a), sym.PLinv.shift_x(b)
    pr, pr_inv = sym.PR.shift_x(a), sym.PRinv.shift_x(b)
    left_base, right_base = pl * pl_inv, pr * pr_inv
    if kind == "d":
        return left_base, right_base
    lhs = dsym[0].shift_x(a) * pl_inv
    rhs = dsym[1].shift_x(a) * pr_inv
    if kind == "a":
        term = left_base.times_power(power_exponent(p, f)).scale(gamma_ratio(f, p) / p.eps)
        return lhs + term, rhs
    if kind == "b":
        term = right_base.times_power(-power_exponent(p, f)).scale(gamma_ratio(f, p) / p.eps)
        return lhs, rhs - term
    n = f.n
    inv_fact = Fraction(1, factorial(n))
    const = log_constant(p, n) * inv_fact / p.eps
    pl_inv_x = sym.PLinv.derive_x().shift_x(b)
    pr_inv_x = sym.PRinv.derive_x().shift_x(b)
    lhs = lhs + (pl * pl_inv_x).times_power(n * p.N).scale(inv_fact) - left_base.times_power(n * p.N).scale(const)
    rhs = rhs + (pr * pr_inv_x).times_power(-n * p.M).scale(inv_fact) + right_base.times_power(-n * p.M).scale(const)
    return lhs, rhs


def scalar_hbi_residual(
    s: EvolvedState | DressingPair,
    variant: str,
    m: int = 0,
    r: int = 0,
    f: FlowIndex | None = None,
    x: int | None = None,
    x_prime: int | None = None,
) -> Any:
    """Left residue minus right residue of one scalar identity (a coefficient)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    explicit = variant.startswith("two-point")
    if not explicit and (x is not None or x_prime is not None):
        raise ValueError("separate x and x' belong to the two-point variants")
    a = 0 if x is None else x
    b = a - m if x_prime is None else x_prime
    m = a - b
    kind = variant[-1]
    p = pair_of(s).params
    if kind == "d":
        if f is not None:
            raise ValueError(f"{variant} is the underived identity and takes no flow")
        sym, dsym = symbols(s), None
    else:
        if f is None:
            raise ValueError(f"{variant} needs a flow")
        if flow_family(p, f) != _VARIANT_FAMILY[kind]:
            raise ValueError(f"{variant} is for the {_VARIANT_FAMILY[kind]} family, {f} is not")
        s.require(f)
        top = s.cap - 1
        sym = symbols(s.capped(top))
        dsym = (left_symbol(time_derivative(s.pL, f, top)), left_symbol(time_derivative(s.pR, f, top)))
    lhs, rhs = _integrands(p, kind, f, sym, dsym, a, b)
    if explicit:
        # lambda^{(x - x')/eps} kept as its own factor
        lhs, rhs = lhs.times_power(m), rhs.times_power(m)
        return lhs.times_power(p.N * r - 1).residue() - rhs.times_power(-p.M * r - 1).residue()
    return lhs.times_power(p.N * r + m - 1).residue() - rhs.times_power(-p.M * r + m - 1).residue()


def check_scalar_hbi(
    s: EvolvedState | DressingPair,
    variant: str,
    m: int = 0,
    r: int = 0,
    f: FlowIndex | None = None,
    x: int | None = None,
    x_prime: int | None = None,
) -> Report:
    """
    One scalar bilinear identity. ``*d`` variants are underived; ``*a``, ``*b``
    and ``*c`` differentiate in an L, R or log flow and compare through degree
    D-1. The two-point variants take the two lattice points x, x' separately.
    """
    label = f"m={m},r={r}" if x is None and x_prime is None else f"x={x},x'={x_prime},r={r}"
    identity = f"{variant}[{label}" + (f",f={f}" if f is not None else "") + "]"
    if variant[-1] != "d":
        early = needs_degree(identity, s, 1)
        if early:
            return early
    try:
        residual = scalar_hbi_residual(s, variant, m, r, f, x, x_prime)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"{identity}: {exc}") from exc
    return check_report(identity, [("Res left - Res right", residual)])


def check_m_translation(s: EvolvedState | DressingPair, m: int, r: int = 0, step: int = 1) -> Report:
    """Moving both points by ``step`` lattice sites only moves the residual."""
    identity = f"m-translation[m={m},r={r},step={step}]"
    try:
        here = scalar_hbi_residual(s, "offset-d", m, r)
        moved = scalar_hbi_residual(s, "two-point-d", r=r, x=step, x_prime=step - m)
        residual = moved - ring_shift(here, step)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"{identity}: {exc}") from exc
    return check_report(identity, [("shifted residual", residual)])


def side_exponent(p: Params, delta: Mapping[FlowIndex, TimePoly], side: str, one: TimePoly) -> LambdaSeries:
    """
    Exponent between t and t - delta on one side: +ratio/eps lambda^e delta on
    the L times and -C_n/(eps n!) lambda^{nN} delta on the log times (side L);
    -ratio/eps lambda^{-e} delta and +C_n/(eps n!) lambda^{-nM} delta (side R).
    """
    lower = side == L_FAMILY
    total = LambdaSeries.zero(one)
    for f, off in delta.items():
        family = flow_family(p, f)
        if family == LOG_FAMILY:
            k = f.n * p.N if lower else -f.n * p.M
            c = log_constant(p, f.n) / (p.eps * factorial(f.n))
            total = total + LambdaSeries.monomial(k, off.scale(-c if lower else c))
        elif family == side:
            e = power_exponent(p, f)
            term = LambdaSeries.monomial(e if lower else -e, off.scale(gamma_ratio(f, p) / p.eps))
            total = total + term if lower else total - term
    return total


def side_shift(p: Params, delta: Mapping[FlowIndex, TimePoly], side: str, one: TimePoly) -> LambdaSeries:
    """x-translation of the primed inverse symbol: sum_n lambda^{nN} delta_n / n! (side L), lambda^{-nM} (side R)."""
    total = LambdaSeries.zero(one)
    for f, off in delta.items():
        if flow_family(p, f) == LOG_FAMILY:
            k = f.n * p.N if side == L_FAMILY else -f.n * p.M
            total = total + LambdaSeries.monomial(k, off.scale(Fraction(1, factorial(f.n))))
    return total


def x_translate(series: LambdaSeries, shift: LambdaSeries, order: int) -> LambdaSeries:
    """series(x + shift) = sum_k shift^k/k! d_x^k series, for a nilpotent shift."""
    total, term = series, series
    power = LambdaSeries.monomial(0, shift.unit)
    for k in range(1, order + 1):
        power = power * shift
        if power.is_zero():
            break
        term = term.derive_x()
        total = total + power.scale(Fraction(1, factorial(k))) * term
    return total


def first_order_offset(s: EvolvedState, *flows: FlowIndex, name: str = "d") -> dict[FlowIndex, TimePoly]:
    """delta_f = d_f on each listed time, with the d_f new nilpotent variables."""
    if not flows:
        raise ValueError("an offset needs at least one time")
    ds = [SpectralVar(name if len(flows) == 1 else f"{name}{i}") for i in range(1, len(flows) + 1)]
    variables = s.flows + tuple(ds)
    unit = s.pL.unit.unit
    return {f: TimePoly.var(variables, s.cap, d, unit) for f, d in zip(flows, ds)}


def _check_offsets(s: EvolvedState, delta: Mapping[FlowIndex, TimePoly]) -> None:
    for f in delta:
        if flow_family(s.params, f) == LOG_FAMILY and f.n == 0:
            raise InactiveTime(f"an offset on {f} is an x translation; use m")
        if f not in s.flows:
            raise InactiveTime(f"offset on {f}, which the state was not evolved in")


def bilinear_residual(
    s: EvolvedState,
    m: int,
    r: int,
    delta: Mapping[FlowIndex, TimePoly],
    exponents: tuple[LambdaSeries, LambdaSeries],
    shifts: tuple[LambdaSeries, LambdaSeries],
) -> TimePoly:
    """
    Res{lambda^{Nr+m-1} P_L(x,t) e^{E_L} P_L^{-1}(x + S_L - m eps, t-delta)}
    - Res{lambda^{-Mr+m-1} P_R(x,t) e^{E_R} P_R^{-1}(x + S_R - m eps, t-delta)}
    for given exponents E and x-translations S.
    """
    p = s.params
    _check_offsets(s, delta)
    variables = next(iter(delta.values())).variables if delta else s.flows
    cap = s.cap
    unit = s.pL.unit.unit
    images = {f: TimePoly.var(variables, cap, f, unit) - off for f, off in delta.items()}

    def here(c: TimePoly) -> TimePoly:
        return c.embed(variables)

    def there(c: TimePoly) -> TimePoly:
        c = c.embed(variables)
        return c.substitute(images) if images else c

    sym = symbols(s)
    grow_l, grow_r = (e.exp_nilpotent(cap) for e in exponents)
    pl_inv = x_translate(sym.PLinv.map_coeffs(there), shifts[0], cap).shift_x(-m)
    pr_inv = x_translate(sym.PRinv.map_coeffs(there), shifts[1], cap).shift_x(-m)
    left = sym.PL.map_coeffs(here) * grow_l * pl_inv
    right = sym.PR.map_coeffs(here) * grow_r * pr_inv
    return left.times_power(p.N * r + m - 1).residue() - right.times_power(-p.M * r + m - 1).residue()


def chan_residual(
    s: EvolvedState, m: int, delta: Mapping[FlowIndex, TimePoly] | None = None, r: int = 0
) -> TimePoly:
    """The bilinear identity between the sequences t and t - delta; log offsets move x as well."""
    p = s.params
    delta = dict(delta or {})
    _check_offsets(s, delta)
    variables = next(iter(delta.values())).variables if delta else s.flows
    one = TimePoly.const(variables, s.cap, s.pL.unit.unit)
    exponents = (side_exponent(p, delta, L_FAMILY, one), side_exponent(p, delta, R_FAMILY, one))
    shifts = (side_shift(p, delta, L_FAMILY, one), side_shift(p, delta, R_FAMILY, one))
    return bilinear_residual(s, m, r, delta, exponents, shifts)


def check_chan(
    s: EvolvedState, m: int, delta: Mapping[FlowIndex, TimePoly] | None = None, r: int = 0
) -> Report:
    """Bilinear identity between the sequences t and t - delta, exact at cap D."""
    tag = ",".join(str(f) for f in (delta or {}))
    identity = f"chan[m={m},r={r}" + (f",delta on {tag}" if tag else "") + "]"
    try:
        residual = chan_residual(s, m, delta, r)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"{identity}: {exc}") from exc
    return check_report(identity, [("Res left - Res right", residual)])


def check_p_inverse_symbols(s: EvolvedState | DressingPair) -> Report:
    """The lambda^0 coefficients of P_L P_L^{-1} and P_R P_R^{-1} are one."""
    sym = symbols(s)
    try:
        left = (sym.PL * sym.PLinv).coefficient(0)
        right = (sym.PR * sym.PRinv).coefficient(0)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"inverse-symbols: {exc}") from exc
    return check_report(
        "inverse-symbols",
        [("P_L P_L^-1", left - ring_one_like(left)), ("P_R P_R^-1", right - ring_one_like(right))],
    )
