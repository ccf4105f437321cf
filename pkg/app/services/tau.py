"""
Tau function of an evolved state and the identities it satisfies.

The one-form omega is read off the wave symbols (log P_L and P_R'/P_R),
integrated radially into log tau, and then every symbol is compared with
the tau quotient it should be. All comparisons happen as TimePolys in the
active times plus one or two spectral variables (mu = lambda^{-1} on the
P_L side, lambda on the P_R side), which keeps them exact at cap D.

Representation: T(x, t) = tau(x - eps/2, t) = theta(x) exp(psi(x, t_log) + phi(x, t)),
with theta a lattice profile (theta(x + eps) = w~_0(x, 0) theta(x)), psi the
log-time dependence fixed by w~_0 and phi the radial integral of omega.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable

from app.models import FAIL, Report
from app.services.flows import (
    WINDOW_ERRORS,
    EvolvedState,
    active_pairs,
    needs_degree,
    sato_rhs,
)
from app.services.hbi import spectral_symbol, symbols
from app.services.lattice import LatticeFn
from app.services.oper import left_symbol, op_mul, right_symbol
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
from app.services.residual import check_report, merge_reports
from app.services.ring import ring_inverse, ring_is_one, ring_is_zero, ring_scale
from app.services.series import MSEQ, NSEQ, LambdaSeries, TimeShiftSequence, spectral_shift
from app.services.timeseries import SpectralVar, TimePoly
from app.utils.errors import DeriveUnsupported, InactiveTime, NotClosed, WindowExhausted, WindowTooSmall

logger = logging.getLogger(__name__)

MU = SpectralVar("mu")
FAY_CASES = ("I", "II", "III")


def spectral_order(p: Params, cap: int) -> int:
    """
    Largest lambda-order compared by the spectral checks. Every spectral
    variable shares the total-degree cap with the times, so orders above D
    are not determined and the request is clipped.
    """
    if p.lam_order > cap:
        logger.debug(f"lambda-order {p.lam_order} clipped to the time cap D={cap}")
    return min(p.lam_order, cap)


def within_order(poly: TimePoly, spectral: Iterable[SpectralVar], order: int) -> TimePoly:
    return poly.truncate_in(spectral, order)


@dataclass(frozen=True)
class OneForm:
    """d log tau(x - eps/2, t) on the active L and R times."""

    state: EvolvedState
    components: dict[FlowIndex, TimePoly]

    @property
    def params(self) -> Params:
        return self.state.params

    @property
    def cap(self) -> int:
        return self.state.cap


@dataclass(frozen=True)
class TauSeries:
    params: Params
    flows: tuple[FlowIndex, ...]
    cap: int
    theta: Any
    psi: TimePoly
    phi: TimePoly
    form: OneForm

    @property
    def state(self) -> EvolvedState:
        return self.form.state

    @property
    def log_tau(self) -> TimePoly:
        """log T(x, t) - log theta(x); vanishes at t = 0."""
        return self.psi + self.phi

    def theta_ratio(self, up: int, down: int) -> Any:
        """theta(x + up*eps) / theta(x + down*eps)."""
        if isinstance(self.theta, LatticeFn):
            return self.theta.shift(up) * self.theta.shift(down).inverse()
        return self.theta * ring_inverse(self.theta)


def required_flows(p: Params, cap: int, kinds: Iterable[str] = (NSEQ, MSEQ)) -> list[FlowIndex]:
    """Times whose shift entries [lambda^{-1}]^N / [lambda]^M survive cap D."""
    out = []
    for kind in kinds:
        alphas = range(p.N, 0, -1) if kind == NSEQ else range(0, -p.M, -1)
        for n in range(cap + 1):
            for a in alphas:
                f = FlowIndex(a, n)
                if power_exponent(p, f) <= cap:
                    out.append(f)
    return out


def _require_shifts(s: EvolvedState, kinds: Iterable[str]) -> None:
    missing = [str(f) for f in required_flows(s.params, s.cap, kinds) if f not in s.flows]
    if missing:
        raise InactiveTime(f"time shifts at cap {s.cap} also move {', '.join(missing)}")


# --- the one-form ---

def _left_component(p: Params, f: FlowIndex, log_pl: LambdaSeries, d_log: dict) -> Any:
    e = power_exponent(p, f)
    total = ring_scale(log_pl.coefficient(-e), -e)
    for g, dl in d_log.items():
        eg = power_exponent(p, g)
        if eg < e:
            total = total - ring_scale(dl.coefficient(eg - e), p.eps / gamma_ratio(g, p))
    return ring_scale(total, gamma_ratio(f, p) / p.eps)


def _right_component(p: Params, f: FlowIndex, dlog_lambda: LambdaSeries, d_log: dict) -> Any:
    e = power_exponent(p, f)
    total = dlog_lambda.coefficient(e - 1)
    for g, dl in d_log.items():
        eg = power_exponent(p, g)
        if eg <= e:
            total = total - ring_scale(dl.coefficient(e - eg), p.eps / gamma_ratio(g, p))
    return ring_scale(total, gamma_ratio(f, p) / p.eps)


def omega(s: EvolvedState) -> OneForm:
    """
    Components on the active L and R times:

        L:  ratio/eps (-e [lambda^{-e}] log P_L - sum_{e' < e} eps/ratio' [lambda^{e'-e}] d' log P_L)
        R:  ratio/eps ([lambda^{e-1}] P_R'/P_R - sum_{e' <= e} eps/ratio' [lambda^{e-e'}] d' log P_R)

    The sums run over every flow of the family, active or not; d' log P comes
    from the Sato right-hand side.
    """
    p = s.params
    left = [f for f in s.flows if flow_family(p, f) == L_FAMILY]
    right = [f for f in s.flows if flow_family(p, f) == R_FAMILY]
    components: dict[FlowIndex, TimePoly] = {}
    try:
        sym = symbols(s)
        if left:
            e_max = max(power_exponent(p, f) for f in left)
            log_pl = sym.PL.log_unit()
            inv_pl = sym.PL.inverse_unit()
            d_log = {g: left_symbol(sato_rhs(s, g)[0]) * inv_pl for g in required_flows(p, e_max - 1, (NSEQ,))}
            for f in left:
                components[f] = _left_component(p, f, log_pl, d_log)
        if right:
            e_max = max(power_exponent(p, f) for f in right)
            inv_pr = sym.PR.inverse_unit()
            dlog_lambda = sym.PR.derive_lambda() * inv_pr
            d_log = {g: left_symbol(sato_rhs(s, g)[1]) * inv_pr for g in required_flows(p, e_max, (MSEQ,))}
            for f in right:
                components[f] = _right_component(p, f, dlog_lambda, d_log)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"one-form: {exc}") from exc
    logger.info(f"One-form built on {[str(f) for f in components]}")
    return OneForm(s, components)


def check_closed(form: OneForm) -> Report:
    """d omega = 0 through degree D-2; with t_{-M,0} active also d_{-M,0} omega = d_x omega."""
    identity = "closed"
    early = needs_degree(identity, form.state, 2)
    if early:
        return early
    comps = form.components
    residuals = [
        (f"d{g} w{f} - d{f} w{g}", comps[f].derivative(g) - comps[g].derivative(f))
        for f, g in active_pairs(comps)
    ]
    x_time = FlowIndex(-form.params.M, 0)
    if x_time in form.state.flows:
        try:
            residuals += [(f"d{x_time} w{f} - dx w{f}", c.derivative(x_time) - c.derive()) for f, c in comps.items()]
        except DeriveUnsupported:
            logger.debug("no x-derivative data, skipping the t_{-M,0} pairs")
    return check_report(identity, residuals, degree=form.cap - 2)


# --- log tau ---

def _profile(w0: Any) -> Any:
    if isinstance(w0, LatticeFn) and not w0.is_const:
        return w0.cumulative_product()
    if ring_is_one(w0):
        return w0
    raise WindowTooSmall("a non-trivial constant w~_0 has no lattice profile")


def _antidifference(c: Any) -> Any:
    if ring_is_zero(c):
        return c
    if isinstance(c, LatticeFn) and not c.is_const:
        return c.cumulative_sum()
    raise WindowTooSmall("antidifference of an x-independent term needs a lattice window")


def log_time_part(s: EvolvedState) -> TimePoly:
    """w~_0 with every L and R time set to zero: its log-time dependence."""
    w0 = s.pR.coefficient(0)
    for f in s.flows:
        if flow_family(s.params, f) != LOG_FAMILY:
            w0 = w0.set_zero(f)
    return w0


def build_log_tau(form: OneForm, check: bool = True) -> TauSeries:
    """log tau by radial integration of omega; theta and psi carry the x and log-time dependence."""
    if check:
        report = check_closed(form)
        if report.status == FAIL:
            raise NotClosed(f"omega is not closed at {report.location}: {report.witness}")
    s = form.state
    variables, cap = s.flows, s.cap
    unit = s.pL.unit.unit
    radial = [variables.index(f) for f in form.components]
    terms: dict[tuple, Any] = {}
    for f, comp in form.components.items():
        i = variables.index(f)
        for e, c in comp.terms.items():
            k = sum(e[j] for j in radial)
            ne = e[:i] + (e[i] + 1,) + e[i + 1:]
            term = ring_scale(c, Fraction(1, k + 1))
            terms[ne] = terms[ne] + term if ne in terms else term
    phi = TimePoly(variables, cap, terms, unit)

    w0 = s.pR.coefficient(0).constant()
    ratio = (log_time_part(s) * ring_inverse(w0)).log()
    psi = TimePoly(variables, cap, {e: _antidifference(c) for e, c in ratio.terms.items()}, unit)
    logger.info(f"log tau built: {len(phi.terms)} radial terms, {len(psi.terms)} log-time terms")
    return TauSeries(s.params, variables, cap, _profile(w0), psi, phi, form)


# --- tau quotients ---

def _spectral_variables(s: EvolvedState, *spectral: SpectralVar) -> tuple:
    return s.flows + tuple(spectral)


Shift = tuple[TimeShiftSequence, SpectralVar]


def _shifted(h: TimePoly, x_shift: int, shifts: Iterable[Shift], p: Params, variables) -> TimePoly:
    """h(x + x_shift, t + offsets) embedded in ``variables``."""
    out = h.shift(x_shift).embed(variables)
    for seq, mu in shifts:
        out = spectral_shift(out, seq, p, mu)
    return out


def _jump(h: TimePoly, x_to: int, shifts, x_from: int, p: Params, variables) -> TimePoly:
    """h(x + x_to, t + offsets) - h(x + x_from, t)."""
    return _shifted(h, x_to, shifts, p, variables) - h.shift(x_from).embed(variables)


QUOTIENTS = ("PL", "PL^-1", "PR", "PR^-1")


def symbol_forms(s: EvolvedState, names: Iterable[str] = QUOTIENTS, mu: SpectralVar = MU) -> dict[str, TimePoly]:
    """P_L, P_L^{-1}, P_R and P_R^{-1} w~_0(t_log) as TimePolys in (t, mu)."""
    cap = s.cap
    variables = _spectral_variables(s, mu)
    sym = symbols(s)
    build = {
        "PL": lambda: spectral_symbol(sym.PL, mu, variables, cap, lower=True),
        "PL^-1": lambda: spectral_symbol(sym.PLinv, mu, variables, cap, lower=True),
        "PR": lambda: spectral_symbol(sym.PR, mu, variables, cap, lower=False),
        "PR^-1": lambda: spectral_symbol(sym.PRinv, mu, variables, cap, lower=False)
        * log_time_part(s).embed(variables),
    }
    return {name: build[name]() for name in names}


def quotient_forms(tau: TauSeries, names: Iterable[str] = QUOTIENTS, mu: SpectralVar = MU) -> dict[str, TimePoly]:
    """The tau quotients matching ``symbol_forms``, from the integrated phi."""
    s, p = tau.state, tau.params
    variables = _spectral_variables(s, mu)
    phi = tau.phi
    lower = TimeShiftSequence(NSEQ, -1), mu
    upper = TimeShiftSequence(NSEQ, 1), mu
    up_r = TimeShiftSequence(MSEQ, 1), mu
    down_r = TimeShiftSequence(MSEQ, -1), mu
    build = {
        "PL": lambda: _jump(phi, 0, [lower], 0, p, variables).exp(),
        "PL^-1": lambda: _jump(phi, 1, [upper], 1, p, variables).exp(),
        "PR": lambda: log_time_part(s).embed(variables) * _jump(phi, 1, [up_r], 0, p, variables).exp(),
        "PR^-1": lambda: _jump(phi, 0, [down_r], 1, p, variables).exp(),
    }
    return {name: build[name]() for name in names}


def tau_quotients(tau: TauSeries, mu: SpectralVar = MU) -> dict[str, tuple[TimePoly, TimePoly]]:
    """Symbol against tau quotient, both as TimePolys in (t, mu)."""
    forms = symbol_forms(tau.state, QUOTIENTS, mu)
    quotients = quotient_forms(tau, QUOTIENTS, mu)
    return {name: (forms[name], quotients[name]) for name in QUOTIENTS}


def check_tau_quotients(tau: TauSeries) -> Report:
    """
    P_L, P_L^{-1}, P_R, P_R^{-1} equal their tau quotients, w_1 = -eps d_{N,0} log tau
    and w~_0 = tau(x + eps/2)/tau(x - eps/2).
    """
    s, p = tau.state, tau.params
    _require_shifts(s, (NSEQ, MSEQ))
    try:
        pairs = tau_quotients(tau)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"tau quotients: {exc}") from exc
    order = spectral_order(p, tau.cap)
    residuals = [
        (name, within_order(symbol - quotient, (MU,), order)) for name, (symbol, quotient) in pairs.items()
    ]
    top = FlowIndex(p.N, 0)
    if top in tau.form.components:
        residuals.append(("w_1", s.pL.coefficient(-1) + tau.form.components[top].scale(p.eps)))
    w0 = log_time_part(s)
    residuals.append(("w~_0", s.pR.coefficient(0) - w0 * (tau.phi.shift(1) - tau.phi).exp()))
    return check_report("tau-quotients", residuals)


def check_omega_shifts(form: OneForm) -> Report:
    """
    For every component v, with d_v the Sato derivative of the symbol:

        (w_v(x, t) - w_v(x, t - [lambda^{-1}]^N)) P_L + d_v P_L = 0
        (w_v(x, t) - w_v(x + eps, t + [lambda]^M)) P_R + d_v P_R = 0
        (w_v(x + eps, t) - w_v(x + eps, t + [lambda^{-1}]^N)) P_L^{-1} + d_v P_L^{-1} = 0
        (w_v(x + eps, t) - w_v(x, t - [lambda]^M)) P_R^{-1} + d_v P_R^{-1} = 0
    """
    s, p, cap = form.state, form.params, form.cap
    _require_shifts(s, (NSEQ, MSEQ))
    variables = _spectral_variables(s, MU)
    d = s.pair
    sym = symbols(s)
    lower, upper = (TimeShiftSequence(NSEQ, -1), MU), (TimeShiftSequence(NSEQ, 1), MU)
    up_r, down_r = (TimeShiftSequence(MSEQ, 1), MU), (TimeShiftSequence(MSEQ, -1), MU)
    order = spectral_order(p, cap)
    reports = []
    for f, w in form.components.items():
        try:
            d_pl, d_pr = sato_rhs(s, f)
            d_pl_inv = -op_mul(op_mul(d.pL_inv, d_pl), d.pL_inv)
            d_pr_inv = -op_mul(op_mul(d.pR_inv, d_pr), d.pR_inv)
            rows = [
                ("P_L", -_jump(w, 0, [lower], 0, p, variables), sym.PL, left_symbol(d_pl), True),
                ("P_R", -_jump(w, 1, [up_r], 0, p, variables), sym.PR, left_symbol(d_pr), False),
                ("P_L^-1", -_jump(w, 1, [upper], 1, p, variables), sym.PLinv, right_symbol(d_pl_inv), True),
                ("P_R^-1", -_jump(w, 0, [down_r], 1, p, variables), sym.PRinv, right_symbol(d_pr_inv), False),
            ]
            residuals = [
                (
                    name,
                    within_order(
                        diff * spectral_symbol(symbol, MU, variables, cap, is_lower)
                        + spectral_symbol(derived, MU, variables, cap, is_lower),
                        (MU,), order,
                    ),
                )
                for name, diff, symbol, derived, is_lower in rows
            ]
        except WINDOW_ERRORS as exc:
            raise WindowExhausted(f"omega shifts {f}: {exc}") from exc
        reports.append(check_report(f"omega-shift{f}", residuals))
    return merge_reports("omega-shifts", reports)


# --- reciprocal and Fay-type identities ---

def check_p_reciprocals(s: EvolvedState) -> Report:
    """P_L^{-1}(x - eps, t - [lambda^{-1}]^N) P_L(x, t) = 1 and P_R^{-1}(x, t + [lambda]^M) P_R(x, t) = 1."""
    p, cap = s.params, s.cap
    _require_shifts(s, (NSEQ, MSEQ))
    variables = _spectral_variables(s, MU)
    sym = symbols(s)
    try:
        pl = spectral_symbol(sym.PL, MU, variables, cap, lower=True)
        pr = spectral_symbol(sym.PR, MU, variables, cap, lower=False)
        pl_inv = spectral_symbol(sym.PLinv.shift_x(-1), MU, variables, cap, lower=True)
        pr_inv = spectral_symbol(sym.PRinv, MU, variables, cap, lower=False)
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"reciprocals: {exc}") from exc
    pl_inv = spectral_shift(pl_inv, TimeShiftSequence(NSEQ, -1), p, MU)
    pr_inv = spectral_shift(pr_inv, TimeShiftSequence(MSEQ, 1), p, MU)
    left, right = pl_inv * pl, pr_inv * pr
    order = spectral_order(p, cap)
    return check_report(
        "reciprocals",
        [
            ("P_L side", within_order(left - left.one_like(), (MU,), order)),
            ("P_R side", within_order(right - right.one_like(), (MU,), order)),
        ],
    )


def check_symbol_products(s: EvolvedState) -> Report:
    """
    The three symbol identities behind the Fay relations, multiplied out:

        P_L(t, mu1) P_L(t - [mu1], mu2) symmetric in mu1, mu2,
        P_L(x, t, mu1) P_R(x, t - [mu1], nu2) = P_R(x, t, nu2) P_L(x + eps, t + [nu2], mu1),
        P_R(x, t, nu1) P_R(x + eps, t + [nu1], nu2) symmetric in nu1, nu2.
    """
    p, cap = s.params, s.cap
    _require_shifts(s, (NSEQ, MSEQ))
    mu1, mu2, nu1, nu2 = SpectralVar("mu1"), SpectralVar("mu2"), SpectralVar("nu1"), SpectralVar("nu2")
    sym = symbols(s)

    def pl(variables, mu, x_shift=0):
        return spectral_symbol(sym.PL.shift_x(x_shift), mu, variables, cap, lower=True)

    def pr(variables, nu, x_shift=0):
        return spectral_symbol(sym.PR.shift_x(x_shift), nu, variables, cap, lower=False)

    def moved(poly, kind, sign, spectral):
        return spectral_shift(poly, TimeShiftSequence(kind, sign), p, spectral)

    try:
        v = _spectral_variables(s, mu1, mu2)
        left_pair = (
            pl(v, mu1) * moved(pl(v, mu2), NSEQ, -1, mu1)
            - pl(v, mu2) * moved(pl(v, mu1), NSEQ, -1, mu2)
        )
        v = _spectral_variables(s, mu1, nu2)
        mixed = (
            pl(v, mu1) * moved(pr(v, nu2), NSEQ, -1, mu1)
            - pr(v, nu2) * moved(pl(v, mu1, 1), MSEQ, 1, nu2)
        )
        v = _spectral_variables(s, nu1, nu2)
        right_pair = (
            pr(v, nu1) * moved(pr(v, nu2, 1), MSEQ, 1, nu1)
            - pr(v, nu2) * moved(pr(v, nu1, 1), MSEQ, 1, nu2)
        )
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"symbol products: {exc}") from exc
    order = spectral_order(p, cap)
    spectral = (mu1, mu2, nu1, nu2)
    return check_report(
        "symbol-products",
        [
            ("P_L pair", within_order(left_pair, spectral, order)),
            ("P_L / P_R", within_order(mixed, spectral, order)),
            ("P_R pair", within_order(right_pair, spectral, order)),
        ],
    )


def fay_residual(tau: TauSeries, case: str) -> TimePoly:
    """Fay-type identity of the given case, divided by T(x, t) T(x + eps, t) (I, II) or T(x, t)^2 (III)."""
    if case not in FAY_CASES:
        raise ValueError(f"unknown Fay case {case!r}; choose from {', '.join(FAY_CASES)}")
    s, p, cap = tau.state, tau.params, tau.cap
    h = tau.log_tau
    if case == "I":
        a, b = SpectralVar("mu1"), SpectralVar("mu2")
        first, second = (TimeShiftSequence(NSEQ, -1), a), (TimeShiftSequence(NSEQ, -1), b)
    elif case == "II":
        a, b = SpectralVar("nu1"), SpectralVar("nu2")
        first, second = (TimeShiftSequence(MSEQ, 1), a), (TimeShiftSequence(MSEQ, 1), b)
    else:
        a, b = SpectralVar("mu1"), SpectralVar("nu2")
        first, second = (TimeShiftSequence(NSEQ, -1), a), (TimeShiftSequence(MSEQ, 1), b)
    v = _spectral_variables(s, a, b)
    unit = s.pL.unit.unit
    la, lb = TimePoly.var(v, cap, a, unit), TimePoly.var(v, cap, b, unit)

    def delta(y, shifts):
        return _jump(h, y, shifts, y, p, v)

    if case == "I":
        return (
            la * (delta(0, [first]) + delta(1, [second])).exp()
            - lb * (delta(0, [second]) + delta(1, [first])).exp()
            - (la - lb) * delta(0, [first, second]).exp()
        )
    if case == "II":
        return (
            (la - lb) * delta(1, [first, second]).exp()
            - la * (delta(1, [first]) + delta(0, [second])).exp()
            + lb * (delta(1, [second]) + delta(0, [first])).exp()
        )
    curvature = h.shift(1) + h.shift(-1) - h.scale(2)
    rho = tau.theta_ratio(1, 0) * tau.theta_ratio(-1, 0)
    return (
        (delta(0, [first]) + delta(0, [second])).exp()
        - delta(0, [first, second]).exp()
        - (la * lb) * (delta(1, [second]) + delta(-1, [first]) + curvature.embed(v)).exp() * rho
    )


def check_fay(tau: TauSeries, case: str) -> Report:
    """Fay-type identity I, II or III as a double spectral expansion, exact at cap D."""
    _require_shifts(tau.state, (NSEQ,) if case == "I" else (MSEQ,) if case == "II" else (NSEQ, MSEQ))
    identity = f"fay-{case}"
    try:
        residual = fay_residual(tau, case)
        spectral = [v for v in residual.variables if isinstance(v, SpectralVar)]
        residual = within_order(residual, spectral, spectral_order(tau.params, tau.cap))
    except WINDOW_ERRORS as exc:
        raise WindowExhausted(f"{identity}: {exc}") from exc
    return check_report(identity, [(f"case {case}", residual)])
