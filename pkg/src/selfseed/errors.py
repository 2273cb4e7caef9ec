"""Exception types shared across the package.

Every failure mode surfaced to callers is one of these classes. The class
name doubles as the diagnostic code printed by the CLI, so names are short
and camel-cased rather than carrying the usual -Error suffix.
"""


class SelfSeedError(Exception):
    """Base class for all package errors. CLI maps these to exit code 2."""

    exit_code = 2


class MissingFile(SelfSeedError):
    """A referenced file or directory does not exist."""


class IoFailure(SelfSeedError):
    """A file exists but cannot be read or written, or its contents are corrupt."""


class DimensionMismatch(SelfSeedError):
    """Array shapes, counts, or label ranges disagree with the manifest or each other."""


class NonFiniteValue(SelfSeedError):
    """A NaN or infinity appeared where only finite values are allowed.

    Raised both for corrupt input matrices and for diverging training runs;
    the CLI maps this one to exit code 3.
    """

    exit_code = 3


class ZeroNormRow(SelfSeedError):
    """An embedding row has (near-)zero norm and cannot be normalized."""


class ZeroNormInput(SelfSeedError):
    """A vector argument to a similarity op has (near-)zero norm."""


class LengthMismatch(SelfSeedError):
    """Two sequences that must be parallel have different lengths."""


class KTooLarge(SelfSeedError):
    """A neighbor count k exceeds what the store can supply (k > M - 1)."""


class RankingTooShort(SelfSeedError):
    """A ranking holds fewer entries than the k requested from it."""


class SeedEmpty(SelfSeedError):
    """Seed assembly produced no assignments (all rankings empty)."""


class MissingGroundTruth(SelfSeedError):
    """An evaluation was requested on a store without ground-truth labels."""


class DimensionTooSmall(SelfSeedError):
    """An embedding dimension is too small for the requested construction."""
