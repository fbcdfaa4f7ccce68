"""Exception types shared across the package."""


class Kan3Error(Exception):
    """Base class for all construction / verification errors."""


class NotUnimodular(Kan3Error):
    """Matrix determinant is not +-1."""


class NotHyperbolic(Kan3Error):
    """Matrix has |trace| <= 2, so no expanding eigenvalue."""


class EigenvalueTooSmall(Kan3Error):
    """Leading eigenvalue is below the required threshold."""


class WrongFixedPointCount(Kan3Error):
    """The automorphism does not have the expected number of fixed points."""


class DegenerateVector(Kan3Error):
    """Candidate integer vector is (numerically) parallel to an eigendirection."""


class NoValidN0(Kan3Error):
    """No return time <= cap produces a chart with disjoint box iterates."""


class InfeasibleLayout(Kan3Error):
    """Requested domain layout cannot satisfy its disjointness/measure constraints."""


class WindowMismatch(Kan3Error):
    """Correction cutoff support escapes its chart validity window."""


class SupportCollision(Kan3Error):
    """A perturbation support overlaps one of the reserved construction domains."""


class OutsideBranches(Kan3Error):
    """Point is not in either branch box of the affine model."""


class InvalidInterval(Kan3Error):
    """Center interval is not strictly inside (0, 1)."""


class TooFewSamples(Kan3Error):
    """A sampled curve needs at least two sample points."""


class OutOfWindow(Kan3Error):
    """Chart sample falls outside the validity window of the comparison."""


class BudgetExhausted(Kan3Error):
    """Point budget ran out before the refinement criterion was met."""


class ConfigError(Kan3Error):
    """Configuration file / flag error (exit code 2 territory)."""


class ParseError(ConfigError):
    """Malformed config text."""


class RangeError(ConfigError):
    """Config value outside its allowed range."""


class UnknownKey(ConfigError):
    """Config key not recognized."""
