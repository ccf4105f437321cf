"""
Hierarchy parameters and the exact constants attached to each flow.

Flows are indexed like times: ``FlowIndex`` is ``TimeVar`` (alpha, n) with
alpha in [-M, N]. Three families:

* ``L``   alpha in [1, N]: generated by powers of L^{1/N},
* ``R``   alpha in [-M+1, 0]: generated by powers of L^{1/M},
* ``LOG`` alpha = -M: the extended logarithmic flows.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from app.services.ring import rat
from app.services.timeseries import TimeVar
from app.utils.errors import ConfigError

FlowIndex = TimeVar

L_FAMILY = "L"
R_FAMILY = "R"
LOG_FAMILY = "LOG"


@dataclass(frozen=True)
class Params:
    """
    Session parameters.

    ``depth`` is the operator truncation: dressing series are carried down to
    Lambda^{-depth} (P_L) and up to Lambda^{depth} (P_R). ``cap`` is the total
    time degree D and ``lam_order`` the largest lambda-order compared by the
    spectral (tau, Fay, vertex) checks; those never go past D.
    """

    N: int
    M: int
    eps: Fraction = Fraction(1)
    depth: int = 6
    cap: int = 2
    lam_order: int = 8

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", rat(self.eps))
        if self.N < 1 or self.M < 1:
            raise ConfigError("N and M must be positive integers")
        if self.eps == 0:
            raise ConfigError("eps must be a nonzero rational")
        if self.depth < 1:
            raise ConfigError("operator depth must be at least 1")
        if self.cap < 0:
            raise ConfigError("time cap D must be a natural number")

    def check_flow(self, f: FlowIndex) -> None:
        if not -self.M <= f.alpha <= self.N or f.n < 0:
            raise ConfigError(f"flow {f} outside alpha in [-{self.M}, {self.N}], n >= 0")

    def flows(self, n_max: int, include_log: bool = True) -> list[FlowIndex]:
        """All flows with n <= n_max, L family first, then R, then LOG."""
        out = [FlowIndex(a, n) for n in range(n_max + 1) for a in range(self.N, 0, -1)]
        out += [FlowIndex(a, n) for n in range(n_max + 1) for a in range(0, -self.M, -1)]
        if include_log:
            out += [FlowIndex(-self.M, n) for n in range(n_max + 1)]
        return out


def flow_family(p: Params, f: FlowIndex) -> str:
    p.check_flow(f)
    if f.alpha >= 1:
        return L_FAMILY
    if f.alpha == -p.M:
        return LOG_FAMILY
    return R_FAMILY


def harmonic(n: int) -> Fraction:
    """C_n = 1 + 1/2 + ... + 1/n, with C_0 = 0."""
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def _s_value(p: Params, f: FlowIndex) -> Fraction:
    if f.alpha >= 1:
        return Fraction(f.alpha - 1, p.N)
    return Fraction(-f.alpha, p.M)


def gamma_ratio(f: FlowIndex, p: Params) -> Fraction:
    """Gamma(2-s)/Gamma(n+2-s) = 1/prod_{j<n} (2-s+j)."""
    p.check_flow(f)
    s = _s_value(p, f)
    out = Fraction(1)
    for j in range(f.n):
        out /= 2 - s + j
    return out


def power_exponent(p: Params, f: FlowIndex) -> int:
    """
    Integer exponent e of the flow: L^{e/N} for the L family, L^{e/M} for the
    R family. It is also the lambda-order of the flow's time-shift entry.
    """
    family = flow_family(p, f)
    if family == L_FAMILY:
        return p.N * (f.n + 1) - f.alpha + 1
    if family == R_FAMILY:
        return p.M * (f.n + 1) + f.alpha
    raise ValueError(f"log flow {f} has no fractional power")


def shift_coefficient(p: Params, f: FlowIndex) -> Fraction:
    """
    c with entry_f = c*eps*lambda^{-e} in [lambda^{-1}]^N (L family) or
    c*eps*lambda^{e} in [lambda]^M (R family); c = Gamma(n+1-s)/(K Gamma(2-s)).
    """
    return 1 / (power_exponent(p, f) * gamma_ratio(f, p))


def log_constant(p: Params, n: int) -> Fraction:
    """(1/2)(1/M + 1/N) C_n, the constant subtracted from log L in B_{-M,n}."""
    return Fraction(1, 2) * (Fraction(1, p.M) + Fraction(1, p.N)) * harmonic(n)


def log_prefactor(n: int) -> Fraction:
    """2/n!, the prefactor of L^n(log L - const) in B_{-M,n} (times 1/eps)."""
    return Fraction(2, factorial(n))


def parse_range(text: str) -> tuple[int, int]:
    """Read ``"LO..HI"`` into an inclusive integer range."""
    try:
        lo, hi = (int(part) for part in str(text).split(".."))
    except ValueError as exc:
        raise ConfigError(f"expected LO..HI, got {text!r}") from exc
    if lo > hi:
        raise ConfigError(f"empty range {text!r}")
    return lo, hi


def parse_flow(text: str) -> FlowIndex:
    """Read ``"ALPHA,N"`` into a flow index."""
    try:
        alpha, n = (int(part) for part in str(text).split(","))
    except ValueError as exc:
        raise ConfigError(f"expected ALPHA,N, got {text!r}") from exc
    return FlowIndex(alpha, n)
