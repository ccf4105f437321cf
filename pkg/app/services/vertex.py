"""
Vertex-operator form of the bilinear equation.

Each of the four sides Gamma^{+a}, Gamma^{-a}, Gamma^{-b}, Gamma^{+b} applied
to tau (and divided by tau) is a tau part times a word of operator factors:

    lambda^{c X/eps}    X = t_{-M,0} + x, moved by the x-shifts
    lambda^{c t0/eps}   the t_{-M,0} half alone, which shifts do not move
    lambda^{c x/eps}    the x half alone
    e^{G l/eps}         l = log lambda, a scalar
    e^{S d_x}           x-shift

``normal_order`` pushes every shift to the right with
e^{S d} lambda^{c x/eps} = lambda^{c x/eps} e^{c S l/eps} e^{S d}. The vertex
words come from the Gamma operators, the wave words from W_L, W_R and their
inverses; the two are normal-ordered separately and compared. Products of a
side at t with a side at t' are normal-ordered the same way, with the primed
powers of lambda taken at t'_{-M,0}.

Only the first-order (l-degree 1) expansion in the log times is supported.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Any, Mapping, NamedTuple, Sequence

from app.models import FAIL, Report
from app.services.flows import WINDOW_ERRORS, EvolvedState, log_flows
from app.services.hbi import bilinear_residual, first_order_offset, side_exponent, side_shift
from app.services.lax import time_shift_entry
from app.services.params import (
    L_FAMILY,
    LOG_FAMILY,
    R_FAMILY,
    FlowIndex,
    Params,
    flow_family,
    gamma_ratio,
    harmonic,
    log_constant,
    power_exponent,
)
from app.services.residual import check_report, merge_reports
from app.services.series import LambdaSeries
from app.services.tau import MU, TauSeries, quotient_forms, spectral_order, symbol_forms, within_order
from app.services.timeseries import SpectralVar, TimePoly
from app.utils.errors import InactiveTime, TruncationUnsupported, WindowExhausted

logger = logging.getLogger(__name__)

A_PLUS = "aPlus"
A_MINUS = "aMinus"
B_MINUS = "bMinus"
B_PLUS = "bPlus"
SIDES = (A_PLUS, A_MINUS, B_MINUS, B_PLUS)

# side -> tau quotient it carries
_QUOTIENT = {A_PLUS: "PL", A_MINUS: "PL^-1", B_MINUS: "PR", B_PLUS: "PR^-1"}

POW = "pow"
POW_T0 = "pow_t0"
POW_X = "pow_x"
ELL = "ell"
SHIFT = "shift"


class Factor(NamedTuple):
    kind: str
    power: int = 0
    series: LambdaSeries | None = None


@dataclass(frozen=True)
class NormalForm:
    """lambda^{t0_power t0/eps} lambda^{x_power x/eps} e^{log_coeff l/eps} e^{shift d_x}."""

    t0_power: int
    x_power: int
    log_coeff: LambdaSeries
    shift: LambdaSeries

    @property
    def common(self) -> int | None:
        """c when the lambda powers combine into lambda^{c X/eps}."""
        return self.t0_power if self.t0_power == self.x_power else None


@dataclass(frozen=True)
class VertexSide:
    which: str
    tau_part: TimePoly
    exponent: LambdaSeries
    form: NormalForm


def _check_truncation(truncation: int) -> None:
    if truncation != 1:
        raise TruncationUnsupported(f"vertex sides are expanded to l-degree 1 only, got {truncation}")


def _check_side(which: str) -> None:
    if which not in SIDES:
        raise ValueError(f"unknown vertex side {which!r}; choose from {', '.join(SIDES)}")


def normal_order(word: Sequence[Factor], one: TimePoly) -> NormalForm:
    t0_power = x_power = 0
    log_coeff = shift = LambdaSeries.zero(one)
    for factor in word:
        if factor.kind in (POW, POW_T0):
            t0_power += factor.power
        if factor.kind in (POW, POW_X):
            x_power += factor.power
            log_coeff = log_coeff + shift.scale(factor.power)
        elif factor.kind == ELL:
            log_coeff = log_coeff + factor.series
        elif factor.kind == SHIFT:
            shift = shift + factor.series
        elif factor.kind != POW_T0:
            raise ValueError(f"unknown factor {factor.kind!r}")
    return NormalForm(t0_power, x_power, log_coeff, shift)


def word_at(
    word: Sequence[Factor], images: Mapping[Any, TimePoly], dt0: Fraction, one: TimePoly
) -> list[Factor]:
    """The word at t -> images(t) and t_{-M,0} -> t_{-M,0} + dt0."""

    def move(c: TimePoly) -> TimePoly:
        return c.substitute(images)

    out = []
    for factor in word:
        if factor.series is not None and images:
            factor = factor._replace(series=factor.series.map_coeffs(move))
        out.append(factor)
        if factor.kind in (POW, POW_T0) and dt0:
            out.append(Factor(ELL, series=LambdaSeries.monomial(0, one.scale(factor.power * dt0))))
    return out


def _log_series(p: Params, log_times: Mapping[int, TimePoly], lower: bool, one: TimePoly) -> LambdaSeries:
    """sum_{n>0} lambda^{nN} t_n / n! (a side) or lambda^{-nM} t_n / n! (b side)."""
    total = LambdaSeries.zero(one)
    for n, t in log_times.items():
        k = n * p.N if lower else -n * p.M
        total = total + LambdaSeries.monomial(k, t.scale(Fraction(1, factorial(n))))
    return total


def vertex_word(
    p: Params, which: str, log_times: Mapping[int, TimePoly], one: TimePoly, dressed: bool = True
) -> list[Factor]:
    """
    Gamma^{+a} = lambda^{X/eps} e^{a l/eps} (exponent) and Gamma^{delta#}_a = e^{a d_x};
    Gamma^{-a} = lambda^{-X/eps} e^{-a l/eps} behind Gamma^delta_a = e^{-a d_x}.
    ``dressed=False`` leaves out the Gamma^delta factors.
    """
    _check_side(which)
    a = _log_series(p, log_times, which in (A_PLUS, A_MINUS), one)
    if which in (A_PLUS, B_MINUS):
        word = [Factor(POW, 1), Factor(ELL, series=a), Factor(SHIFT, series=a)]
    else:
        word = [Factor(SHIFT, series=-a), Factor(POW, -1), Factor(ELL, series=-a)]
    return word if dressed else [f for f in word if f.kind != SHIFT]


def wave_word(p: Params, which: str, log_times: Mapping[int, TimePoly], one: TimePoly) -> list[Factor]:
    """W = lambda^{t0/eps} P e^{a d_x} lambda^{x/eps} and W^{-1} = lambda^{-X/eps} e^{-a d_x} P^{-1}."""
    _check_side(which)
    a = _log_series(p, log_times, which in (A_PLUS, A_MINUS), one)
    if which in (A_PLUS, B_MINUS):
        return [Factor(POW_T0, 1), Factor(SHIFT, series=a), Factor(POW_X, 1)]
    return [Factor(POW, -1), Factor(SHIFT, series=-a)]


def _log_times(s: EvolvedState, variables: Sequence[Any], cap: int, unit: Any) -> dict[int, TimePoly]:
    return {f.n: TimePoly.var(variables, cap, f, unit) for f in log_flows(s.params, s.flows) if f.n >= 1}


def _vertex_exponent(
    p: Params, which: str, flows: tuple, cap: int, unit: Any, variables: tuple | None = None
) -> LambdaSeries:
    """Exponent of the vertex operator: ratio/eps on the L (R) times, C_n on the log times."""
    variables = variables or flows
    one = TimePoly.const(variables, cap, unit)
    total = LambdaSeries.zero(one)
    a_side = which in (A_PLUS, A_MINUS)
    for f in flows:
        family = flow_family(p, f)
        t = TimePoly.var(variables, cap, f, unit)
        if a_side and family == L_FAMILY:
            total = total + LambdaSeries.monomial(power_exponent(p, f), t.scale(gamma_ratio(f, p) / p.eps))
        elif not a_side and family == R_FAMILY:
            total = total - LambdaSeries.monomial(-power_exponent(p, f), t.scale(gamma_ratio(f, p) / p.eps))
        elif family == LOG_FAMILY and f.n >= 1:
            c = Fraction(1, 2) * (Fraction(1, p.M) + Fraction(1, p.N)) * harmonic(f.n) / (p.eps * factorial(f.n))
            k = f.n * p.N if a_side else -f.n * p.M
            total = total + LambdaSeries.monomial(k, t.scale(-c if a_side else c))
    return total if which in (A_PLUS, B_MINUS) else -total


def _wave_exponent(p: Params, which: str, flows: tuple, cap: int, unit: Any) -> LambdaSeries:
    """The same exponent read off xi_L and xi_R of the wave functions, through the time-shift entries."""
    one = TimePoly.const(flows, cap, unit)
    xi_l = LambdaSeries.zero(one)
    xi_r = LambdaSeries.zero(one)
    for f in flows:
        t = TimePoly.var(flows, cap, f, unit)
        entry = time_shift_entry(p, f)
        if entry is not None:
            coeff, e = entry
            if flow_family(p, f) == L_FAMILY:
                xi_l = xi_l + LambdaSeries.monomial(e, t.scale(1 / (e * coeff)))
            else:
                xi_r = xi_r + LambdaSeries.monomial(-e, t.scale(1 / (e * coeff)))
        elif f.n >= 1:
            c = log_constant(p, f.n) / (p.eps * factorial(f.n))
            xi_l = xi_l - LambdaSeries.monomial(f.n * p.N, t.scale(c))
            xi_r = xi_r - LambdaSeries.monomial(-f.n * p.M, t.scale(c))
    return {A_PLUS: xi_l, A_MINUS: -xi_l, B_MINUS: -xi_r, B_PLUS: xi_r}[which]


def vertex_side(tau: TauSeries, which: str, truncation: int = 1) -> VertexSide:
    """One side in vertex form: the tau part is a quotient of the integrated tau function."""
    _check_truncation(truncation)
    _check_side(which)
    s, p, cap = tau.state, tau.params, tau.cap
    unit = s.pL.unit.unit
    try:
        quotient = quotient_forms(tau, names=(_QUOTIENT[which],))[_QUOTIENT[which]]
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"vertex side {which}: {exc}") from exc
    one = TimePoly.const(s.flows, cap, unit)
    form = normal_order(vertex_word(p, which, _log_times(s, s.flows, cap, unit), one), one)
    return VertexSide(which, quotient, _vertex_exponent(p, which, s.flows, cap, unit), form)


def wave_side(s: EvolvedState, which: str) -> VertexSide:
    """The same side in wave form: the tau part is the dressing symbol."""
    _check_side(which)
    p, cap = s.params, s.cap
    unit = s.pL.unit.unit
    try:
        symbol = symbol_forms(s, names=(_QUOTIENT[which],))[_QUOTIENT[which]]
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"wave side {which}: {exc}") from exc
    one = TimePoly.const(s.flows, cap, unit)
    form = normal_order(wave_word(p, which, _log_times(s, s.flows, cap, unit), one), one)
    return VertexSide(which, symbol, _wave_exponent(p, which, s.flows, cap, unit), form)


def check_vertex_identities(tau: TauSeries, truncation: int = 1) -> Report:
    """Vertex form and wave form of every side agree, through the checked lambda-order."""
    _check_truncation(truncation)
    order = spectral_order(tau.params, tau.cap)
    reports = []
    for which in SIDES:
        v, w = vertex_side(tau, which, truncation), wave_side(tau.state, which)
        reports.append(
            check_report(
                f"vertex-identity[{which}]",
                [
                    ("tau part", within_order(v.tau_part - w.tau_part, (MU,), order)),
                    ("exponent", v.exponent - w.exponent),
                    ("lambda^t0 power", Fraction(v.form.t0_power - w.form.t0_power)),
                    ("lambda^x power", Fraction(v.form.x_power - w.form.x_power)),
                    ("log coefficient", v.form.log_coeff - w.form.log_coeff),
                    ("shift", v.form.shift - w.form.shift),
                ],
            )
        )
    return merge_reports("vertex-identities", reports)


def default_offsets(s: EvolvedState) -> dict[FlowIndex, TimePoly]:
    """First-order offsets on the first log time t_{-M,n>=1} and the first L or R time of the state."""
    p = s.params
    logs = [f for f in log_flows(p, s.flows) if f.n >= 1]
    movable = [f for f in s.flows if flow_family(p, f) != LOG_FAMILY]
    chosen = logs[:1] + movable[:1]
    return first_order_offset(s, *chosen) if chosen else {}


def _offset_images(delta: Mapping[FlowIndex, TimePoly], variables, cap: int, unit: Any) -> dict:
    return {f: TimePoly.var(variables, cap, f, unit) - off for f, off in delta.items()}


def check_vertex_hbe(
    tau: TauSeries,
    m: int,
    r: int = 0,
    delta: Mapping[FlowIndex, TimePoly] | None = None,
    truncation: int = 1,
    bth: bool = False,
    with_identities: bool = True,
) -> Report:
    """
    Vertex bilinear equation between t and t' = t - delta with t_{-M,0} - t'_{-M,0} = m eps.

    Each product of vertex words must normal-order to lambda^m, with no free
    lambda^{X/eps}, an x-shift equal to the log offsets and an exponent equal
    to the xi offsets. The residue is then taken with that exponent and shift.
    """
    _check_truncation(truncation)
    s, p, cap = tau.state, tau.params, tau.cap
    identity = f"vertex-hbe[m={m},r={r}]"
    if bth and any(f.n >= 1 for f in log_flows(p, s.flows)):
        raise InactiveTime("bilinear Toda mode excludes the log times t_{-M,n>=1}")
    if delta is None:
        delta = default_offsets(s)
    variables = next(iter(delta.values())).variables if delta else s.flows
    unit = s.pL.unit.unit
    one = TimePoly.const(variables, cap, unit)
    images = _offset_images(delta, variables, cap, unit)
    log_times = _log_times(s, variables, cap, unit)

    def move(c: TimePoly) -> TimePoly:
        return c.substitute(images) if images else c

    residuals = []
    exponents, shifts = [], []
    for first, second, side in ((A_PLUS, A_MINUS, L_FAMILY), (B_MINUS, B_PLUS, R_FAMILY)):
        word = vertex_word(p, first, log_times, one) + word_at(
            vertex_word(p, second, log_times, one), images, -m * p.eps, one
        )
        form = normal_order(word, one)
        exponent = _vertex_exponent(p, first, s.flows, cap, unit, variables) + _vertex_exponent(
            p, second, s.flows, cap, unit, variables
        ).map_coeffs(move)
        pair = f"{first}*{second}"
        residuals += [
            (f"{pair} lambda^t0 power", Fraction(form.t0_power)),
            (f"{pair} lambda^x power", Fraction(form.x_power)),
            (f"{pair} l-coefficient", form.log_coeff - LambdaSeries.monomial(0, one.scale(m * p.eps))),
            (f"{pair} shift", form.shift - side_shift(p, delta, side, one)),
            (f"{pair} exponent", exponent - side_exponent(p, delta, side, one)),
        ]
        exponents.append(exponent)
        shifts.append(form.shift)
    structural = check_report(identity, residuals)
    if structural.status == FAIL:
        return structural
    try:
        residual = bilinear_residual(s, m, r, delta, tuple(exponents), tuple(shifts))
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"{identity}: {exc}") from exc
    reports = [structural, check_report(identity, [("Res left - Res right", residual)])]
    if with_identities:
        reports.insert(1, check_vertex_identities(tau, truncation))
    return merge_reports(identity, reports)


def check_monodromy(
    p: Params, delta_t0: Fraction, n_max: int = 1, truncation: int = 1, dressed: bool = True
) -> Report:
    """
    Single-valuedness near lambda = infinity of both vertex products between t
    and t' with t_{-M,0} - t'_{-M,0} = delta_t0 and arbitrary log offsets d_n:
    the normal-ordered l-coefficient must be a constant c, and c/eps an integer.
    """
    _check_truncation(truncation)
    delta_t0 = Fraction(delta_t0)
    a = [SpectralVar(f"a{n}") for n in range(1, n_max + 1)]
    d = [SpectralVar(f"d{n}") for n in range(1, n_max + 1)]
    variables = tuple(a + d)
    one = TimePoly.const(variables, 1, Fraction(1))
    here = {n: TimePoly.var(variables, 1, a[n - 1]) for n in range(1, n_max + 1)}
    images = {a[n - 1]: here[n] - TimePoly.var(variables, 1, d[n - 1]) for n in range(1, n_max + 1)}
    residuals = []
    exponents = []
    for first, second in ((A_PLUS, A_MINUS), (B_MINUS, B_PLUS)):
        word = vertex_word(p, first, here, one, dressed) + word_at(
            vertex_word(p, second, here, one, dressed), images, -delta_t0, one
        )
        form = normal_order(word, one)
        constant = form.log_coeff.coefficient(0).constant()
        exponents.append(constant / p.eps)
        residuals += [
            (f"{first}*{second} lambda^t0 power", Fraction(form.t0_power)),
            (f"{first}*{second} lambda^x power", Fraction(form.x_power)),
            (f"{first}*{second} l-coefficient", form.log_coeff - LambdaSeries.monomial(0, one.scale(constant))),
        ]
    identity = f"monodromy[dt0={delta_t0}]" + ("" if dressed else "[undressed]")
    report = check_report(identity, residuals)
    fractional = [e for e in exponents if e.denominator != 1]
    if report.passed and fractional:
        logger.warning(f"{identity}: exponent {fractional[0]} is not an integer")
        return Report(identity=identity, status=FAIL, location={"term": "net exponent"}, witness=str(fractional[0]))
    return report
