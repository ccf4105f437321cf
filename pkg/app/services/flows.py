"""
Sato evolution as truncated power series in the hierarchy times, and the
checks built on it (Lax, zero curvature, root/log evolution, Sato residual).

Degree-d coefficients of the evolved dressing pair are read off from the
degree-(d-1) right-hand sides; nothing is integrated numerically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable

from app.models import Report
from app.services.lax import (
    DressingPair,
    a_op,
    b_op,
    band_lax,
    logs,
    root_power,
    symbolic_pair,
)
from app.services.oper import LambdaOp, commutator, derive_op, op_mul, op_power, op_scale, project, sum_window
from app.services.params import (
    L_FAMILY,
    LOG_FAMILY,
    R_FAMILY,
    FlowIndex,
    Params,
    flow_family,
    gamma_ratio,
    power_exponent,
)
from app.services.residual import check_report, skipped
from app.services.ring import U, CoeffPoly, ring_scale
from app.services.series import is_zero_window
from app.services.timeseries import TimePoly, lift
from app.utils.errors import (
    AmbiguousTail,
    EmptyWindow,
    FractionalFlow,
    InactiveTime,
    WindowExhausted,
    WindowOverflow,
    WindowTooSmall,
)

logger = logging.getLogger(__name__)

WINDOW_ERRORS = (EmptyWindow, AmbiguousTail, WindowTooSmall, WindowOverflow)


@dataclass(frozen=True)
class EvolvedState:
    """Dressing pair with TimePoly coefficients in the active times, total degree <= cap."""

    base: DressingPair
    flows: tuple[FlowIndex, ...]
    cap: int
    pL: LambdaOp
    pR: LambdaOp

    @property
    def params(self) -> Params:
        return self.base.params

    @property
    def variables(self) -> tuple[FlowIndex, ...]:
        return self.flows

    @cached_property
    def pair(self) -> DressingPair:
        return self.base.with_ops(self.pL, self.pR)

    def capped(self, cap: int) -> "EvolvedState":
        """The same state with every coefficient truncated to total degree <= cap."""
        if cap == self.cap:
            return self
        if cap < 0:
            raise ValueError("cap must be a natural number")
        return replace(
            self,
            cap=cap,
            pL=self.pL.map_coeffs(lambda c: c.with_cap(cap)),
            pR=self.pR.map_coeffs(lambda c: c.with_cap(cap)),
        )

    def narrow(self, by: int) -> "EvolvedState":
        """Drop ``by`` rows at the truncated end of both operators."""
        if by <= 0:
            return self
        return replace(
            self,
            pL=self.pL.restrict(self.pL.lo + by, self.pL.hi),
            pR=self.pR.restrict(self.pR.lo, self.pR.hi - by),
        )

    def require(self, *flows: FlowIndex) -> None:
        missing = [str(f) for f in flows if f not in self.flows]
        if missing:
            raise InactiveTime(f"state was not evolved in {', '.join(missing)}")


def pair_of(s: EvolvedState | DressingPair) -> DressingPair:
    return s.pair if isinstance(s, EvolvedState) else s


def time_derivative(op: LambdaOp, v: FlowIndex, cap: int | None = None) -> LambdaOp:
    """Coefficientwise d/dt_v; the constant eps*d part differentiates to zero."""

    def fn(c: TimePoly) -> TimePoly:
        out = c.derivative(v)
        return out if cap is None else out.with_cap(cap)

    coeffs = {k: fn(c) for k, c in op.coeffs.items()}
    unit = op.unit if cap is None else op.unit.with_cap(cap)
    return LambdaOp(coeffs, op.lo, op.hi, op.lo_exact, op.hi_exact, unit, 0, op.eps)


def with_cap(op: LambdaOp, cap: int) -> LambdaOp:
    return op.map_coeffs(lambda c: c.with_cap(cap))


def sato_rhs(s: EvolvedState | DressingPair, f: FlowIndex) -> tuple[LambdaOp, LambdaOp]:
    """(-(B_f)_- P_L, (B_f)_+ P_R)."""
    d = pair_of(s)
    b = b_op(d, f)
    d_pl = -op_mul(project(b, "minus"), d.pL)
    d_pr = op_mul(project(b, "plus"), d.pR)
    return d_pl, d_pr


def required_window(p: Params, flows: Iterable[FlowIndex], cap: int) -> tuple[int, int]:
    """
    Operator depth (P_L, P_R) needed to evolve to degree ``cap`` and still form
    B and L for every flow at the end. Each order costs e (L family) or N*n
    (log family) on P_L and e~ (R family) or M*n (log family) on P_R.
    """
    loss_l, loss_r = [0], [0]
    reach_l, reach_r = [p.N], [p.M]
    for f in flows:
        family = flow_family(p, f)
        if family == L_FAMILY:
            e = power_exponent(p, f)
            loss_l.append(e)
            reach_l.append(e)
        elif family == R_FAMILY:
            e = power_exponent(p, f)
            loss_r.append(e)
            reach_r.append(e)
        else:
            loss_l.append(p.N * f.n)
            loss_r.append(p.M * f.n)
            reach_l.append(p.N * f.n)
            reach_r.append(p.M * f.n)
    return cap * max(loss_l) + max(reach_l), cap * max(loss_r) + max(reach_r)


def _lift_pair(d: DressingPair, flows: tuple[FlowIndex, ...], cap: int) -> tuple[LambdaOp, LambdaOp]:
    return (
        d.pL.map_coeffs(lambda c: lift(c, flows, cap)),
        d.pR.map_coeffs(lambda c: lift(c, flows, cap)),
    )


def _integrate(op: LambdaOp, rhs: list[LambdaOp], degree: int, flows: tuple, cap: int) -> LambdaOp:
    """Add the degree-``degree`` terms fixed by d/dt_f op = rhs_f (first active variable wins)."""
    window = op.window
    for r in rhs:
        if not is_zero_window(r.window):
            window = sum_window(window, r.window)
    lo, hi = window[0], window[1]
    ring_one = op.unit.unit
    coeffs: dict[int, TimePoly] = {}
    for k in range(lo, hi + 1):
        base = op.coefficient(k)
        terms: dict[tuple, Any] = dict(base.terms)
        for i, r in enumerate(rhs):
            c = r.coefficient(k)
            for e, v in c.terms.items():
                if sum(e) != degree - 1 or any(e[:i]):
                    continue
                a = e[:i] + (e[i] + 1,) + e[i + 1:]
                terms[a] = ring_scale(v, Fraction(1, a[i]))
        coeffs[k] = TimePoly(flows, cap, terms, ring_one)
    return LambdaOp(coeffs, lo, hi, window[2], window[3], op.unit, 0, op.eps)


def evolve(d: DressingPair, flows: Iterable[FlowIndex], cap: int) -> EvolvedState:
    """
    Solve the Sato equations order by order in the active times, to total
    degree ``cap``, with the base pair as the value at t = 0.
    """
    p = d.params
    flows = tuple(dict.fromkeys(flows))
    for f in flows:
        p.check_flow(f)
    need_l, need_r = required_window(p, flows, cap) if flows else (0, 0)
    if (not d.pL.lo_exact and -d.pL.lo < need_l) or (not d.pR.hi_exact and d.pR.hi < need_r):
        raise WindowExhausted(
            f"evolving {len(flows)} flows to degree {cap} needs depth ({need_l}, {need_r}), "
            f"have ({-d.pL.lo}, {d.pR.hi})"
        )
    pL, pR = _lift_pair(d, flows, cap)
    state = EvolvedState(d, flows, cap, pL, pR)
    if not flows:
        return state
    for degree in range(1, cap + 1):
        low = state.capped(degree - 1)
        try:
            rhs = [sato_rhs(low, f) for f in flows]
            pL = _integrate(state.pL, [r[0] for r in rhs], degree, flows, cap)
            pR = _integrate(state.pR, [r[1] for r in rhs], degree, flows, cap)
        except WINDOW_ERRORS as exc:
            raise WindowExhausted(f"evolution stopped at degree {degree}: {exc}") from exc
        state = replace(state, pL=pL, pR=pR)
        logger.debug(f"Evolved to degree {degree}: P_L window {pL.lo}..{pL.hi}, P_R window {pR.lo}..{pR.hi}")
    logger.info(f"Evolution finished: flows={[str(f) for f in flows]} D={cap}")
    return state


# --- checks ---

def needs_degree(identity: str, s: EvolvedState, minimum: int) -> Report | None:
    if s.cap < minimum:
        return skipped(identity, f"time cap D={s.cap} below {minimum}")
    return None


def check_lax(s: EvolvedState, f: FlowIndex) -> Report:
    """d/dt_f L - [A_f, L] through degree D-1."""
    identity = f"lax{f}"
    early = needs_degree(identity, s, 1)
    if early:
        return early
    s.require(f)
    top = s.cap - 1
    d_l = time_derivative(band_lax(s.pair), f, top)
    low = s.capped(top).pair
    rhs = commutator(a_op(low, f), band_lax(low))
    return check_report(identity, [("dL - [A, L]", d_l - rhs)])


def check_zs(s: EvolvedState, f: FlowIndex, g: FlowIndex) -> Report:
    """
    d_g A_f - d_f A_g + [A_f, A_g] = 0 and d_g [A_f, L] = d_f [A_g, L],
    through degree D-2.
    """
    identity = f"zs{f}{g}"
    early = needs_degree(identity, s, 2)
    if early:
        return early
    s.require(f, g)
    top = s.cap - 2
    mid = s.capped(s.cap - 1).pair
    low = s.capped(top).pair
    a_f, a_g = a_op(mid, f), a_op(mid, g)
    curvature = (
        time_derivative(a_f, g, top)
        - time_derivative(a_g, f, top)
        + commutator(a_op(low, f), a_op(low, g))
    )
    lax_mid = band_lax(mid)
    mixed = time_derivative(commutator(a_f, lax_mid), g, top) - time_derivative(commutator(a_g, lax_mid), f, top)
    return check_report(identity, [("zero curvature", curvature), ("mixed partials of L", mixed)])


def check_lemma_d(s: EvolvedState, f: FlowIndex, parts: tuple[str, ...] = ("roots", "logs")) -> Report:
    """
    Evolution of the roots and logarithms through degree D-1:

        (L^{1/N})_t = [-(B)_-, L^{1/N}],   (L^{1/M})_t = [(B)_+, L^{1/M}],
        (log_+ L)_t = [-(B)_-, log_+ L],   (log_- L)_t = [(B)_+, log_- L],
        (log L)_t = [-(B)_-, log_+ L]/2N + [(B)_+, log_- L]/2M.
    """
    identity = f"lemma{f}" + ("" if len(parts) == 2 else f"[{','.join(parts)}]")
    early = needs_degree(identity, s, 1)
    if early:
        return early
    s.require(f)
    p = s.params
    top = s.cap - 1
    full = s.pair
    low = s.capped(top).pair
    b = b_op(low, f)
    minus = -project(b, "minus")
    plus = project(b, "plus")
    residuals = []
    if "roots" in parts:
        root_n, root_m = root_power(full, 1, "left"), root_power(full, 1, "right")
        low_n, low_m = root_power(low, 1, "left"), root_power(low, 1, "right")
        residuals.append(("rootN", time_derivative(root_n, f, top) - commutator(minus, low_n)))
        residuals.append(("rootM", time_derivative(root_m, f, top) - commutator(plus, low_m)))
    if "logs" in parts:
        full_logs, low_logs = logs(full), logs(low)
        left = commutator(minus, low_logs.log_plus)
        right = commutator(plus, low_logs.log_minus)
        residuals.append(("log+", time_derivative(full_logs.log_plus, f, top) - left))
        residuals.append(("log-", time_derivative(full_logs.log_minus, f, top) - right))
        combined = op_scale(left, Fraction(1, 2 * p.N)) + op_scale(right, Fraction(1, 2 * p.M))
        residuals.append(("logL", time_derivative(full_logs.log_l, f, top) - combined))
    return check_report(identity, residuals)


def check_sato(s: EvolvedState, f: FlowIndex) -> Report:
    """d/dt_f P_L + (B)_- P_L and d/dt_f P_R - (B)_+ P_R through degree D-1."""
    identity = f"sato{f}"
    early = needs_degree(identity, s, 1)
    if early:
        return early
    s.require(f)
    top = s.cap - 1
    d_pl, d_pr = sato_rhs(s.capped(top), f)
    return check_report(
        identity,
        [
            ("P_L", time_derivative(s.pL, f, top) - d_pl),
            ("P_R", time_derivative(s.pR, f, top) - d_pr),
        ],
    )


def check_flow_pairing(s: EvolvedState, n: int) -> Report:
    """
    A_{1,n} - A_{0,n} = L^{n+1} / ((n+1)! eps), and when both times are
    active, d_{1,n} L = d_{0,n} L through degree D-1.
    """
    identity = f"pairing[n={n}]"
    p = s.params
    one, zero = FlowIndex(1, n), FlowIndex(0, n)
    d = s.pair
    difference = a_op(d, one) - a_op(d, zero)
    ratio = Fraction(1)
    for k in range(2, n + 2):
        ratio /= k
    full_power = op_scale(op_power(band_lax(d), n + 1), ratio / p.eps)
    residuals = [("A_1 - A_0 - L^(n+1)", difference - full_power)]
    if one in s.flows and zero in s.flows and s.cap >= 1:
        lax = band_lax(d)
        top = s.cap - 1
        residuals.append(("d_1 L - d_0 L", time_derivative(lax, one, top) - time_derivative(lax, zero, top)))
    return check_report(identity, residuals)


def check_x_pairing(d: DressingPair) -> Report:
    """
    The Sato flow of t_{-M,0} acts on P_L and P_R as d/dx.

    B_{-M,0} carries the 1/eps of the log prefactor, so the flow is d/dx and
    not eps*d/dx: t_{-M,0} and x enter only through t_{-M,0} + x. Derivative
    jets, ``derive_x`` and the tau function (a function of t_{-M,0} + x) all
    use this normalization.
    """
    f = FlowIndex(-d.params.M, 0)
    d_pl, d_pr = sato_rhs(d, f)
    return check_report(
        "x-pairing",
        [("P_L", d_pl - derive_op(d.pL)), ("P_R", d_pr - derive_op(d.pR))],
    )


def check_w_relations(s: EvolvedState, f: FlowIndex) -> Report:
    """d_f w_1 = -Res B_f and d_f w~_0 = b_0 w~_0, with b_0 the Lambda^0 coefficient of B_f."""
    identity = f"w-relations{f}"
    early = needs_degree(identity, s, 1)
    if early:
        return early
    s.require(f)
    top = s.cap - 1
    low = s.capped(top)
    b = b_op(low.pair, f)
    w1 = s.pL.coefficient(-1).derivative(f).with_cap(top)
    wt0 = s.pR.coefficient(0).derivative(f).with_cap(top)
    return check_report(
        identity,
        [
            ("w_1", w1 + b.coefficient(-1)),
            ("w~_0", wt0 - b.coefficient(0) * low.pR.coefficient(0)),
        ],
    )


def active_pairs(flows: Iterable[FlowIndex]) -> list[tuple[FlowIndex, FlowIndex]]:
    flows = list(flows)
    return [(f, g) for i, f in enumerate(flows) for g in flows[i + 1:]]


def log_flows(p: Params, flows: Iterable[FlowIndex]) -> list[FlowIndex]:
    return [f for f in flows if flow_family(p, f) == LOG_FAMILY]


# --- explicit flow equations ---

def u_lax_operator(p: Params) -> LambdaOp:
    """Lambda^N + u_{N-1} Lambda^{N-1} + ... + u_{-M} Lambda^{-M} with free u generators."""
    one = CoeffPoly.const(1)
    coeffs = {p.N: one, **{j: CoeffPoly.gen(U, j) for j in range(-p.M, p.N)}}
    return LambdaOp(coeffs, -p.M, p.N, True, True, one, eps=p.eps)


def u_flow_equations(p: Params, f: FlowIndex) -> dict[int, Any]:
    """
    d u_j / d t_f = [A_f, L]_j for j = N-1 down to -M. Only alpha = 1 and
    alpha = 0 give B as an integer power of L.
    """
    p.check_flow(f)
    if f.alpha not in (0, 1):
        source = "log L" if flow_family(p, f) == LOG_FAMILY else "a fractional power of L"
        raise FractionalFlow(
            f"t{f} is generated by {source}; "
            f"its flow is only polynomial in the dressing variables"
        )
    lax = u_lax_operator(p)
    b = op_scale(op_power(lax, f.n + 1), gamma_ratio(f, p) / p.eps)
    a = project(b, "plus") if f.alpha == 1 else -project(b, "minus")
    bracket = commutator(a, lax)
    return {j: bracket.coefficient(j) for j in range(p.N - 1, -p.M - 1, -1)}


def w_flow_equations(p: Params, f: FlowIndex, count: int) -> dict[int, Any]:
    """d w_i / d t_f for i = 1..count, from -(B_f)_- P_L on the free dressing pair."""
    p.check_flow(f)
    d_pl, _ = sato_rhs(symbolic_pair(p), f)
    out = {}
    for i in range(1, count + 1):
        try:
            out[i] = d_pl.coefficient(-i)
        except WINDOW_ERRORS:
            logger.debug(f"d w_{i}/dt{f} is outside the operator window")
            break
    return out
