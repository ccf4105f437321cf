"""
Hierarchy state built from a dressing pair.

The dressing data (P_L, P_R) is the fundamental state; the Lax operator, the
two fractional roots, the logarithms and the flow generators B/A are all
derived from it by conjugation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, NamedTuple

from app.services.oper import (
    MONIC_LOWER,
    UNIT_UPPER,
    LambdaOp,
    derive_op,
    invert,
    op_mul,
    op_power,
    op_scale,
    op_sub,
    project,
)
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
    log_prefactor,
    power_exponent,
)
from app.services.ring import WL, WRT, CoeffPoly, ring_inverse, ring_is_one, ring_scale, ring_shift
from app.services.series import MSEQ, NSEQ, TimeShiftSequence
from app.utils.errors import NotInvertible, WindowOverflow, WindowTooSmall

logger = logging.getLogger(__name__)

SYMBOLIC = "symbolic"
SAMPLED = "sampled"

__all__ = [
    "DressingPair",
    "LogOperator",
    "Roots",
    "symbolic_pair",
    "trivial_pair",
    "lax_operator",
    "band_lax",
    "u_from_wL",
    "u_from_wR",
    "roots",
    "root_power",
    "logs",
    "b_op",
    "a_op",
    "gamma_ratio",
    "harmonic",
    "flow_family",
    "time_shift_entry",
]


@dataclass(frozen=True)
class DressingPair:
    """
    P_L = 1 + sum_{i>=1} w_i Lambda^{-i} and P_R = sum_{i>=0} w~_i Lambda^i.

    ``backend`` is ``symbolic`` (free generators, the two sides independent)
    or ``sampled`` (lattice data satisfying the dressing consistency). The
    coefficient ring is whatever the operators carry: CoeffPoly, LatticeFn
    or TimePoly over either.
    """

    params: Params
    pL: LambdaOp
    pR: LambdaOp
    backend: str = SYMBOLIC
    seed: int | None = None
    lattice: tuple[int, int] | None = None
    der_order: int | None = None

    def __post_init__(self) -> None:
        if any(k > 0 for k in self.pL.coeffs) or not ring_is_one(self.pL.coefficient(0)):
            raise NotInvertible("P_L must be 1 + lower terms")
        if any(k < 0 for k in self.pR.coeffs):
            raise NotInvertible("P_R must be supported on Lambda^{k>=0}")
        if self.backend not in (SYMBOLIC, SAMPLED):
            raise ValueError(f"unknown backend {self.backend!r}")

    @property
    def eps(self) -> Fraction:
        return self.params.eps

    @property
    def unit(self) -> Any:
        return self.pL.unit

    def with_ops(self, pL: LambdaOp, pR: LambdaOp) -> "DressingPair":
        return replace(self, pL=pL, pR=pR)

    def restrict(self, depth: int) -> "DressingPair":
        """The same pair known only to Lambda^{-depth} in P_L and Lambda^{depth} in P_R."""
        if depth >= self.params.depth:
            return self
        return replace(
            self,
            params=replace(self.params, depth=depth),
            pL=self.pL.restrict(-depth, 0),
            pR=self.pR.restrict(0, depth),
        )

    def _inverse_depth(self, op: LambdaOp, lower: bool) -> int | None:
        exact = op.lo_exact if lower else op.hi_exact
        return self.params.depth if exact else None

    @cached_property
    def pL_inv(self) -> LambdaOp:
        return invert(self.pL, MONIC_LOWER, self._inverse_depth(self.pL, lower=True))

    @cached_property
    def pR_inv(self) -> LambdaOp:
        return invert(self.pR, UNIT_UPPER, self._inverse_depth(self.pR, lower=False))

    def w(self, i: int) -> Any:
        """w_i, the Lambda^{-i} coefficient of P_L."""
        return self.pL.coefficient(-i)

    def w_tilde(self, i: int) -> Any:
        """w~_i, the Lambda^{i} coefficient of P_R."""
        return self.pR.coefficient(i)


class Roots(NamedTuple):
    rootN: LambdaOp
    rootM: LambdaOp


@dataclass(frozen=True)
class LogOperator:
    """log_+ L, log_- L and their eps*d-free average log L."""

    log_plus: LambdaOp
    log_minus: LambdaOp
    log_l: LambdaOp


def symbolic_pair(params: Params, depth: int | None = None) -> DressingPair:
    """Free-generator dressing pair, truncated at Lambda^{-depth} and Lambda^{depth}."""
    depth = depth or params.depth
    one = CoeffPoly.const(1)
    left = {0: one}
    left.update({-i: CoeffPoly.gen(WL, i) for i in range(1, depth + 1)})
    right = {k: CoeffPoly.gen(WRT, k) for k in range(depth + 1)}
    pL = LambdaOp(left, -depth, 0, False, True, one, eps=params.eps)
    pR = LambdaOp(right, 0, depth, True, False, one, eps=params.eps)
    return DressingPair(params, pL, pR, backend=SYMBOLIC)


def trivial_pair(params: Params, unit: Any = Fraction(1)) -> DressingPair:
    """P_L = P_R = 1 exactly. Only one-sided identities make sense on it."""
    ident = LambdaOp.identity(unit, params.eps)
    return DressingPair(params, ident, ident, backend=SYMBOLIC)


def _conjugate(p: LambdaOp, p_inv: LambdaOp, k: int) -> LambdaOp:
    shift = LambdaOp.shift_power(k, p.unit, p.eps)
    return op_mul(op_mul(p, shift), p_inv)


def lax_operator(d: DressingPair, side: str = "left") -> LambdaOp:
    """P_L Lambda^N P_L^{-1} (``left``) or P_R Lambda^{-M} P_R^{-1} (``right``)."""
    try:
        if side == "left":
            return _conjugate(d.pL, d.pL_inv, d.params.N)
        if side == "right":
            return _conjugate(d.pR, d.pR_inv, -d.params.M)
    except WindowOverflow as exc:
        raise WindowTooSmall(str(exc)) from exc
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def band_lax(d: DressingPair) -> LambdaOp:
    """
    Exact band form Lambda^N + ... + u_{-M} Lambda^{-M}: the k >= 0 part of the
    left conjugation plus the k < 0 part of the right one.
    """
    left = project(lax_operator(d, "left"), "plus")
    right = project(lax_operator(d, "right"), "minus")
    return left + right


def root_power(d: DressingPair, k: int, side: str) -> LambdaOp:
    """(L^{1/N})^k = P_L Lambda^k P_L^{-1}, or (L^{1/M})^k = P_R Lambda^{-k} P_R^{-1}."""
    if side == "left":
        return _conjugate(d.pL, d.pL_inv, k)
    if side == "right":
        return _conjugate(d.pR, d.pR_inv, -k)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def roots(d: DressingPair) -> Roots:
    return Roots(root_power(d, 1, "left"), root_power(d, 1, "right"))


def u_from_wL(d: DressingPair) -> dict[int, Any]:
    """
    u_{N-1}, ..., u_{-M} from the w_i (coefficients of L P_L = P_L Lambda^N):

        u_{N-k} = w_k - S^N w_k - sum_{j=N-k+1}^{N-1} u_j S^j(w_{j-N+k}).
    """
    N, M = d.params.N, d.params.M
    u: dict[int, Any] = {}
    try:
        for k in range(1, N + M + 1):
            wk = d.w(k)
            value = wk - ring_shift(wk, N)
            for j in range(N - k + 1, N):
                value = value - u[j] * ring_shift(d.w(j - N + k), j)
            u[N - k] = value
    except WindowOverflow as exc:
        raise WindowTooSmall(f"P_L window too short for u_{{-{M}}}: {exc}") from exc
    return u


def u_from_wR(d: DressingPair) -> dict[int, Any]:
    """
    u_{-M}, ..., u_N from the w~_i (coefficients of L P_R = P_R Lambda^{-M}):

        u_{k-M} S^{k-M}(w~_0) = w~_k - sum_{j=-M}^{k-M-1} u_j S^j(w~_{k-M-j}).

    The last row returns u_N, which equals 1 on a consistent pair.
    """
    N, M = d.params.N, d.params.M
    w0 = d.w_tilde(0)
    u: dict[int, Any] = {}
    try:
        for k in range(0, M + N + 1):
            value = d.w_tilde(k)
            for j in range(-M, k - M):
                value = value - u[j] * ring_shift(d.w_tilde(k - M - j), j)
            u[k - M] = value * ring_inverse(ring_shift(w0, k - M))
    except WindowOverflow as exc:
        raise WindowTooSmall(f"P_R window too short for u_{N}: {exc}") from exc
    return u


def logs(d: DressingPair) -> LogOperator:
    """
    log_+ L = N eps d - N eps P_Lx P_L^{-1},
    log_- L = -M eps d + M eps P_Rx P_R^{-1},
    log L = log_+ L / 2N + log_- L / 2M.
    """
    N, M, eps = d.params.N, d.params.M, d.eps
    unit = d.unit
    left = op_mul(derive_op(d.pL), d.pL_inv)
    right = op_mul(derive_op(d.pR), d.pR_inv)
    log_plus = LambdaOp.eps_d(N, unit, eps) - op_scale(left, N * eps)
    log_minus = LambdaOp.eps_d(-M, unit, eps) + op_scale(right, M * eps)
    log_l = op_scale(log_plus, Fraction(1, 2 * N)) + op_scale(log_minus, Fraction(1, 2 * M))
    return LogOperator(log_plus, log_minus, log_l)


def b_op(d: DressingPair, f: FlowIndex) -> LambdaOp:
    """
    B_{alpha,n}:
      alpha >= 1       ratio/eps * (L^{1/N})^{N(n+1)-alpha+1}
      -M < alpha <= 0  ratio/eps * (L^{1/M})^{M(n+1)+alpha}
      alpha = -M       2/(eps n!) * L^n (log L - C_n (1/M + 1/N)/2)
    """
    p = d.params
    family = flow_family(p, f)
    try:
        if family == L_FAMILY:
            power = root_power(d, power_exponent(p, f), "left")
            return op_scale(power, gamma_ratio(f, p) / p.eps)
        if family == R_FAMILY:
            power = root_power(d, power_exponent(p, f), "right")
            return op_scale(power, gamma_ratio(f, p) / p.eps)
        log_l = logs(d).log_l
        c = log_constant(p, f.n)
        if c:
            log_l = op_sub(log_l, LambdaOp.const(ring_scale(d.unit, c), p.eps))
        if f.n:
            log_l = op_mul(op_power(band_lax(d), f.n), log_l)
        return op_scale(log_l, log_prefactor(f.n) / p.eps)
    except WindowOverflow as exc:
        raise WindowTooSmall(f"B{f} does not fit the operator window: {exc}") from exc


def a_op(d: DressingPair, f: FlowIndex) -> LambdaOp:
    """A = (B)_+ for the L and log families, A = -(B)_- for the R family."""
    b = b_op(d, f)
    if flow_family(d.params, f) == R_FAMILY:
        return -project(b, "minus")
    return project(b, "plus")


def time_shift_entry(params: Params, f: FlowIndex) -> tuple[Fraction, int] | None:
    """Component (c*eps, e) of [lambda^{-1}]^N or [lambda]^M on t_f; None for log times."""
    family = flow_family(params, f)
    if family == LOG_FAMILY:
        return None
    seq = TimeShiftSequence(NSEQ if family == L_FAMILY else MSEQ)
    return seq.entry(params, f)

