"""
Exception hierarchy for the EBTH toolkit.

Library code raises these. The check runner records a check as ``skipped``
only when it cannot be formed at all (no derivative data, an eps*d part,
an unsupported truncation or an inactive time); any other error is a
failed check.
"""


class EBTHError(Exception):
    """Base class for every error raised by the toolkit."""


# --- ring ---
class MissingGenerator(EBTHError):
    """An evaluation assignment does not cover a generator of the polynomial."""


class ZeroDenominator(EBTHError):
    """A value that must be inverted is zero."""


class VariableSetMismatch(EBTHError):
    """Two time series with different active variables or caps were combined."""


class WindowOverflow(EBTHError):
    """A coefficient outside the exactly known window was requested."""


# --- operators ---
class EmptyWindow(EBTHError):
    """A product left no exactly known coefficient."""


class DeriveUnsupported(EBTHError):
    """The coefficient ring cannot differentiate (no derivative data)."""


class DpartUnsupported(EBTHError):
    """The requested operation is not defined for operators carrying an eps*d part."""


class AmbiguousTail(EBTHError):
    """A truncated tail crosses the projection boundary on the kept side."""


class NotInvertible(EBTHError):
    """The operator does not have the normalized shape required for inversion."""


class WindowTooSmall(EBTHError):
    """The lattice or operator window cannot hold the requested quantity."""


class UnluckyZero(EBTHError):
    """A random draw produced a vanishing value that must be inverted."""


# --- flows / tau ---
class WindowExhausted(EBTHError):
    """Evolution or a residue check needs a deeper operator window."""


class NotClosed(EBTHError):
    """The one-form is not closed, so log tau cannot be integrated."""


class TruncationUnsupported(EBTHError):
    """The vertex computation was asked for beyond first order in the log times."""


class InactiveTime(EBTHError):
    """A time offset touches a time the state was not evolved in."""


# --- cli ---
class ConfigError(EBTHError):
    """Invalid run configuration."""


class FractionalFlow(EBTHError):
    """The flow is generated by a fractional power of L and has no closed u-variable form."""
