"""Exception and warning types shared across the package.

Every error raised by this package derives from :class:`MelragError` so
callers (notably the CLI) can map failures to exit codes without matching
on strings.
"""

from __future__ import annotations


class MelragError(Exception):
    """Base class for all package errors."""


# --- record validation ------------------------------------------------------

class CaseValidationError(MelragError):
    """A clinical case record violates a field constraint."""


class EmptyId(CaseValidationError):
    pass


class InvalidAge(CaseValidationError):
    pass


class InvalidSex(CaseValidationError):
    pass


class InvalidAnatomicalSite(CaseValidationError):
    pass


class InvalidImageRef(CaseValidationError):
    pass


class InvalidLabel(CaseValidationError):
    pass


class DuplicateId(MelragError):
    """Two records in one collection share an id."""


# --- vectors and bundles ----------------------------------------------------

class DimensionMismatch(MelragError):
    """A vector's length disagrees with the declared dimension."""


class NonFiniteVector(MelragError):
    """A vector contains NaN or infinity."""


class BundleError(MelragError):
    """An embedding bundle cannot be read, written, or validated."""


class BadMagic(BundleError):
    pass


class UnsupportedVersion(BundleError):
    pass


class TruncatedPayload(BundleError):
    pass


class NonFiniteValue(BundleError):
    pass


class InvariantViolation(BundleError):
    """Bundle contents are structurally inconsistent (counts, dims, ids)."""


class IoFailure(BundleError):
    """The underlying file could not be opened, read, or written."""


# --- prompting --------------------------------------------------------------

class NeighborCountMismatch(MelragError):
    """Prompt construction received a neighbor list of the wrong length."""


# --- backend ----------------------------------------------------------------

class BackendError(MelragError):
    """A model backend failed to produce a completion."""


class BackendUnavailable(BackendError):
    """Transport-level failure (connection refused, HTTP error, bad body)."""


class BackendTimeout(BackendError):
    """The backend did not answer within the configured deadline."""


# --- evaluation -------------------------------------------------------------

class EmptyDataset(MelragError):
    """An operation that needs at least one case received none."""


class EmptyCounts(MelragError):
    """Metrics were requested for a confusion matrix with zero total."""


class UnknownCaseId(MelragError):
    """A prediction or neighbor references an id absent from ground truth."""


class IdSetMismatch(MelragError):
    """Two prediction sets do not cover the same case ids."""


# --- warnings ---------------------------------------------------------------

class ZeroVectorWarning(UserWarning):
    """L2 normalization of an all-zero vector leaves it unchanged."""


class EmptyBundleWarning(UserWarning):
    """An index was built over zero cases; every query returns nothing."""
