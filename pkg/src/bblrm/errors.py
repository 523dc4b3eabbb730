"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BblrmError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(BblrmError, ValueError):
    """An argument violates a documented precondition."""


class SamplerFailureError(BblrmError, RuntimeError):
    """The Metropolis sampler produced an unusable chain.

    Raised when the log posterior turns non-finite at the chain state or the
    realised acceptance rate lands outside the trusted band.
    """


class OracleFailureError(BblrmError, RuntimeError):
    """Deterministic quadrature could not normalise the posterior."""


class BatchFailureError(BblrmError, RuntimeError):
    """Too many trials inside one simulation batch raised errors.

    A batch tolerates isolated failures (at most 0.1% of trials); beyond that
    the operating characteristics would be misleading, so the whole batch is
    rejected.
    """


class FormatError(BblrmError, ValueError):
    """A structured input file or payload failed validation.

    Collects every problem found rather than stopping at the first, so a user
    can fix a file in one pass.
    """

    def __init__(self, message: str, items: list[str] | None = None):
        self.items = list(items or [])
        if self.items:
            message = message + "\n" + "\n".join("  - " + it for it in self.items)
        super().__init__(message)


class ScenarioFormatError(FormatError):
    """A scenario definition (file or payload) is malformed."""


class ConfigFormatError(FormatError):
    """A trial configuration (file or payload) is malformed."""


class HistoryFormatError(FormatError):
    """A trial history (file or payload) is malformed."""
