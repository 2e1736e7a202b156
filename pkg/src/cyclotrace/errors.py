"""Exception types shared across the package.

Every error that a caller might reasonably want to catch has its own class;
they all derive from CyclotraceError so `except CyclotraceError` works as a
catch-all at the CLI boundary (algorithmic failures map to exit code 1 there,
argument problems to exit code 2).
"""


class CyclotraceError(Exception):
    """Base class for all package-specific errors."""


class UsageError(CyclotraceError):
    """Bad arguments or configuration; maps to CLI exit code 2."""


class InstanceTooLarge(UsageError):
    """Exact enumeration requested beyond the supported size cap."""


class BadLength(UsageError):
    """A length constraint was violated (e.g. pad target shorter than 2n)."""


class BadArgs(UsageError):
    """Numeric arguments out of range."""


class BadFactors(UsageError):
    """Counterexample construction needs three factors >= 2."""


class BadTarget(UsageError):
    """Boosted deletion rate must satisfy q <= q' < 1."""


class PatternTooLong(UsageError):
    """k-mer pattern longer than the string it is matched against."""


class PadNotUnique(CyclotraceError):
    """Unpadding needs exactly one occurrence of the pad marker."""


class DegenerateWeight(CyclotraceError):
    """A chain weight (z_B - q)/p fell below the magnitude floor."""


class LengthMismatch(UsageError):
    """Candidate strings of different lengths cannot be compared."""


class EmptyTraceStream(CyclotraceError):
    """An estimator was asked to average over zero traces."""


class NoCondorcetWinner(CyclotraceError):
    """Pairwise tournament finished without an undefeated candidate."""


class NotFound(CyclotraceError):
    """Search over the root-of-unity grid found no separating point."""


class IllConditioned(CyclotraceError):
    """Least-squares recovery rejected: the design matrix is unusable."""


class NotRegular(CyclotraceError):
    """Census cannot be glued: multiplicities or overlaps are inconsistent."""


class InsufficientTraces(CyclotraceError):
    """Recovered census does not account for all n windows."""


class ZeroLikelihoodBoth(CyclotraceError):
    """A trace is impossible under both candidate laws."""
