"""Exception types shared across the toolkit.

Every domain error derives from :class:`CHError` so callers (notably the
CLI) can separate usage/input problems from genuine negative results.
"""

from __future__ import annotations


class CHError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(CHError):
    """Operands live on Hilbert spaces of different dimension."""


class DependentVectors(CHError):
    """Spanning set is linearly dependent within tolerance."""


class NotAProjector(CHError):
    """Matrix fails the Hermitian/idempotent projector test."""


class NotOrthogonal(CHError):
    """Two projectors that must be orthogonal are not."""

    def __init__(self, msg: str, i: int | None = None, j: int | None = None):
        super().__init__(msg)
        self.i = i
        self.j = j


class DoesNotSumToIdentity(CHError):
    """Decomposition members do not sum to the identity."""

    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


class ExplosionGuard(CHError):
    """An enumeration would exceed the configured cap."""


class HistoryNotInFamily(CHError):
    """History events are not slot-wise sums of family members."""


class InconsistentFamily(CHError):
    """Operation requires a weakly decoherent family."""


class ZeroConditioningEvent(CHError):
    """Conditioning history has (numerically) zero probability."""


class NotConjoinable(CHError):
    """Slot-wise product of two histories is not a projector."""


class NonCommutingSlot(CHError):
    """Projectors sharing a time slot do not commute."""

    def __init__(self, msg: str, slot: int, i: int | None = None, j: int | None = None):
        super().__init__(msg)
        self.slot = slot
        self.i = i
        self.j = j


class ConditionFailed(CHError):
    """A contrary-inference candidate fails one or more conditions.

    ``failed`` lists condition names; ``values`` holds the measured
    quantities so callers can distinguish near-misses from clear misses.
    """

    def __init__(self, msg: str, failed: list[str], values: dict[str, float]):
        super().__init__(msg)
        self.failed = failed
        self.values = values


class HistoryNotInAnyConsistentFamily(CHError):
    """Ordered-consistency check got a history outside the catalog."""


class InconsistentCatalogFamily(CHError):
    """Support-model catalog contains a non-decoherent family."""


class ZeroWeightSum(CHError):
    """Catalog weights sum to zero."""


class UnknownSystem(CHError):
    """System id outside the simulated ensemble."""


class NotAContraryPair(CHError):
    """Family pair fails contrary-inference verification."""


class CatalogMissingFamily(CHError):
    """A required family is absent from the model catalog."""


class ScenarioError(CHError):
    """Scenario document is malformed or references unknown names."""
