"""Exception hierarchy shared by all covplan modules."""

from __future__ import annotations


class CovplanError(Exception):
    """Base class for all errors raised by covplan."""


class ModelError(CovplanError):
    """A domain-type invariant was violated while constructing or using a model.

    Signals a construction bug (bad caller), not bad end-user input files.
    """


class UnsatisfiableModelError(CovplanError):
    """The model admits no valid configuration.

    ``conflict`` holds a minimal conflicting constraint subset when one could
    be isolated within budget, otherwise the full constraint list.
    """

    def __init__(self, message: str, conflict: tuple[str, ...] = ()):
        super().__init__(message)
        self.conflict = conflict


class StaleArtifactError(CovplanError):
    """An artifact does not match the model it claims to describe."""


class PartialArrayError(CovplanError):
    """Generation hit the configured row cap before reaching full coverage."""


class ConstraintEntanglementError(CovplanError):
    """A parameter slated for pruning is still referenced by a constraint."""


class ReductionError(CovplanError):
    """Equivalence-class reduction produced an unsatisfiable model."""

    def __init__(self, message: str, parameter: str | None = None):
        super().__init__(message)
        self.parameter = parameter


class UnsupportedStrategyError(CovplanError):
    """A known but non-executable reduction strategy was selected."""


class InternalConsistencyError(CovplanError):
    """Two pipeline results disagree; indicates a bug, not bad input."""
