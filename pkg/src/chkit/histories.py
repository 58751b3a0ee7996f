"""Decompositions, histories, families, and the decoherence functional.

A family fixes one decomposition of the identity per time slot; its
elementary histories are the slot-wise Cartesian product. The chain
operator of a history is the time-ordered product of its events (latest
event leftmost) and the pairwise functional is
``D(h1, h2) = Tr(C_h1 rho C_h2^dagger)``. A family counts as consistent
when every off-diagonal real part of that table vanishes within tol
(weak decoherence); probabilities are then the diagonal entries.

``rho`` defaults to the maximally mixed state ``I/N`` everywhere, which
makes ``D(h, h)`` equal to ``Tr(C_h C_h^dagger)/N``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np

from . import kernels
from .errors import (
    CHError,
    DimensionMismatch,
    DoesNotSumToIdentity,
    ExplosionGuard,
    HistoryNotInFamily,
    InconsistentFamily,
    NotConjoinable,
    NotOrthogonal,
    ZeroConditioningEvent,
)
from .linalg import (
    DEFAULT_TOL,
    MAX_DIM,
    Projector,
    identity_projector,
    is_zero,
    max_abs,
    maximally_mixed,
    orthogonal,
    projector_equal,
    projector_from_matrix,
    validate_density_matrix,
)

ENUMERATION_CAP = 10**6


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Mutually orthogonal projectors summing to the identity."""

    members: tuple[Projector, ...]

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label or f"m{i}" for i, m in enumerate(self.members))

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class History:
    """One event per time slot, tagged with slot labels."""

    events: tuple[Projector, ...]
    slot_labels: tuple[str, ...]
    name: str | None = None

    def __post_init__(self):
        if len(self.events) == 0:
            raise CHError("a history needs at least one event")
        if len(self.events) != len(self.slot_labels):
            raise CHError("events and slot_labels lengths differ")
        dims = {e.dim for e in self.events}
        if len(dims) != 1:
            raise DimensionMismatch(f"history events span dimensions {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.events[0].dim

    def event_at(self, label: str) -> Projector | None:
        try:
            return self.events[self.slot_labels.index(label)]
        except ValueError:
            return None


@dataclass(frozen=True, eq=False)
class Family:
    """Ordered time slots, each holding a decomposition of the identity."""

    slots: tuple[Decomposition, ...]
    slot_labels: tuple[str, ...]
    name: str | None = None

    def __post_init__(self):
        if len(self.slots) != len(self.slot_labels):
            raise CHError("slots and slot_labels lengths differ")
        dims = {d.dim for d in self.slots}
        if len(dims) != 1:
            raise DimensionMismatch(f"family slots span dimensions {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.slots[0].dim

    def n_elementary(self) -> int:
        n = 1
        for d in self.slots:
            n *= len(d)
        return n


@dataclass(frozen=True, eq=False)
class DecoherenceReport:
    """Pairwise functional table over the elementary histories."""

    histories: tuple[History, ...]
    table: np.ndarray  # complex (n, n), table[i, j] = D(h_i, h_j)
    max_off_diagonal_re: float
    is_weakly_decoherent: bool
    tol_used: float

    def value(self, i: int, j: int) -> complex:
        return complex(self.table[i, j])


@dataclass(frozen=True, eq=False)
class Scenario:
    """Named objects sharing one dimension, tolerance, and state."""

    dim: int
    tol: float
    projectors: dict[str, Projector]
    decompositions: dict[str, Decomposition]
    families: dict[str, Family]
    histories: dict[str, History]
    rho: np.ndarray
    params: dict
    allow_zero_members: bool = False

    def __post_init__(self):
        if not (1 <= self.dim <= MAX_DIM):
            raise CHError(f"dimension {self.dim} outside [1, {MAX_DIM}]")


# ---------------------------------------------------------------------------
# construction and validation


def validate_decomposition(projectors, tol: float = DEFAULT_TOL,
                           allow_zero_members: bool = False) -> Decomposition:
    """Check pairwise orthogonality and completeness, returning the decomposition."""
    members = tuple(projectors)
    if not members:
        raise CHError("decomposition needs at least one member")
    dim = members[0].dim
    for m in members:
        if m.dim != dim:
            raise DimensionMismatch("decomposition members have mixed dimensions")
        if not allow_zero_members and is_zero(m, tol):
            raise CHError("zero projector as decomposition member (allow_zero_members is off)")
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if not orthogonal(members[i], members[j], tol):
                raise NotOrthogonal(f"members {i} and {j} are not orthogonal", i, j)
    total = sum(m.matrix for m in members)
    residual = max_abs(total - np.eye(dim))
    if residual > tol:
        raise DoesNotSumToIdentity(
            f"members sum to identity with residual {residual:.3e}", residual)
    return Decomposition(members)


def trivial_decomposition(dim: int) -> Decomposition:
    return Decomposition((identity_projector(dim),))


def trivial_family(dim: int, slot_labels=("t1",), name: str | None = None) -> Family:
    labels = tuple(slot_labels)
    return Family(tuple(trivial_decomposition(dim) for _ in labels), labels, name)


# ---------------------------------------------------------------------------
# time-grid alignment

def merge_slot_labels(a, b) -> tuple[str, ...]:
    """Merge two label sequences preserving both relative orders."""
    a, b = list(a), list(b)
    out: list[str] = []
    i = j = 0
    while i < len(a) or j < len(b):
        if i < len(a) and j < len(b) and a[i] == b[j]:
            out.append(a[i]); i += 1; j += 1
        elif i < len(a) and a[i] not in b[j:]:
            out.append(a[i]); i += 1
        elif j < len(b) and b[j] not in a[i:]:
            out.append(b[j]); j += 1
        else:
            raise CHError(f"slot labels {a} and {b} have conflicting order")
    return tuple(out)


def common_grid(*objs) -> tuple[str, ...]:
    labels: tuple[str, ...] = ()
    for o in objs:
        labels = merge_slot_labels(labels, o.slot_labels)
    return labels


def pad_history(h: History, labels) -> History:
    """Insert identity events at slots the history does not mention."""
    labels = tuple(labels)
    if h.slot_labels == labels:
        return h
    ident = identity_projector(h.dim)
    events = []
    for lab in labels:
        e = h.event_at(lab)
        events.append(e if e is not None else ident)
    if len([lab for lab in h.slot_labels if lab not in labels]) > 0:
        raise CHError(f"history slots {h.slot_labels} not contained in grid {labels}")
    return History(tuple(events), labels, h.name)


def pad_family(f: Family, labels) -> Family:
    """Insert trivial decompositions at slots the family does not mention."""
    labels = tuple(labels)
    if f.slot_labels == labels:
        return f
    slots = []
    for lab in labels:
        if lab in f.slot_labels:
            slots.append(f.slots[f.slot_labels.index(lab)])
        else:
            slots.append(trivial_decomposition(f.dim))
    if len([lab for lab in f.slot_labels if lab not in labels]) > 0:
        raise CHError(f"family slots {f.slot_labels} not contained in grid {labels}")
    return Family(tuple(slots), labels, f.name)


# ---------------------------------------------------------------------------
# enumeration and membership


def enumerate_elementary(family: Family, cap: int = ENUMERATION_CAP) -> list[History]:
    """All slot-wise member combinations, lexicographic in slot order."""
    total = family.n_elementary()
    if total > cap:
        raise ExplosionGuard(f"{total} elementary histories exceed cap {cap}")
    out = []
    for combo in itertools.product(*(range(len(d)) for d in family.slots)):
        events = tuple(family.slots[k].members[i] for k, i in enumerate(combo))
        name = "|".join(family.slots[k].labels[i] for k, i in enumerate(combo))
        out.append(History(events, family.slot_labels, name))
    return out


def _slot_member_subset(event: Projector, decomposition: Decomposition,
                        tol: float) -> tuple[int, ...] | None:
    """Indices of members summing to the event, or None.

    Members are picked greedily by the overlap test
    ``Tr(E m) > Tr(m)/2`` (exact subset sums make that overlap 0 or
    Tr(m)), then the selection is verified against the event.
    """
    selected = []
    for i, m in enumerate(decomposition.members):
        tr_m = m.rank
        if tr_m == 0:
            continue
        overlap = float(np.trace(event.matrix @ m.matrix).real)
        if overlap > tr_m / 2.0:
            selected.append(i)
    total = sum((decomposition.members[i].matrix for i in selected),
                np.zeros((event.dim, event.dim), dtype=np.complex128))
    if max_abs(total - event.matrix) <= tol:
        return tuple(selected)
    return None


def history_in_family(h: History, family: Family, tol: float = DEFAULT_TOL
                      ) -> list[tuple[int, ...]] | None:
    """Per-slot member subsets witnessing membership, or None.

    The history and family are first aligned on a common time grid
    (missing history slots count as identity events).
    """
    if h.dim != family.dim:
        raise DimensionMismatch("history and family dimensions differ")
    grid = common_grid(family, h)
    h = pad_history(h, grid)
    family = pad_family(family, grid)
    witness = []
    for k, d in enumerate(family.slots):
        subset = _slot_member_subset(h.events[k], d, tol)
        if subset is None:
            return None
        witness.append(subset)
    return witness


def coarse_history_cell(h: History, family: Family, tol: float = DEFAULT_TOL,
                        cap: int = ENUMERATION_CAP) -> list[History]:
    """Elementary histories slot-wise below the given history."""
    witness = history_in_family(h, family, tol)
    if witness is None:
        raise HistoryNotInFamily(f"history {h.name or h.slot_labels} not in family")
    grid = common_grid(family, h)
    family = pad_family(family, grid)
    total = 1
    for subset in witness:
        total *= len(subset)
    if total > cap:
        raise ExplosionGuard(f"cell of size {total} exceeds cap {cap}")
    out = []
    for combo in itertools.product(*witness):
        events = tuple(family.slots[k].members[i] for k, i in enumerate(combo))
        name = "|".join(family.slots[k].labels[i] for k, i in enumerate(combo))
        out.append(History(events, family.slot_labels, name))
    return out


# ---------------------------------------------------------------------------
# chain operators and the decoherence functional


def chain_operator(h: History) -> np.ndarray:
    """Time-ordered product E_n @ ... @ E_1 (latest event leftmost)."""
    out = np.array(h.events[0].matrix)
    for e in h.events[1:]:
        out = e.matrix @ out
    return out


def _event_stack(histories: list[History]) -> np.ndarray:
    n_slots = len(histories[0].events)
    dim = histories[0].dim
    stack = np.empty((len(histories), n_slots, dim, dim), dtype=np.complex128)
    for i, h in enumerate(histories):
        for k, e in enumerate(h.events):
            stack[i, k] = e.matrix
    return stack


def _resolve_rho(rho, dim: int, tol: float) -> np.ndarray:
    if rho is None:
        return maximally_mixed(dim)
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (dim, dim):
        raise DimensionMismatch(f"rho has shape {rho.shape}, expected ({dim}, {dim})")
    return rho


def decoherence_functional(h1: History, h2: History, rho=None,
                           tol: float = DEFAULT_TOL) -> complex:
    """D(h1, h2) = Tr(C_h1 rho C_h2^dagger)."""
    if h1.dim != h2.dim:
        raise DimensionMismatch("histories live on different dimensions")
    grid = common_grid(h1, h2)
    c1 = chain_operator(pad_history(h1, grid))
    c2 = chain_operator(pad_history(h2, grid))
    rho = _resolve_rho(rho, h1.dim, tol)
    return complex(np.trace(c1 @ rho @ c2.conj().T))


def history_weight(h: History, rho=None, tol: float = DEFAULT_TOL) -> float:
    """Re Tr(C_h rho C_h^dagger)."""
    c = chain_operator(h)
    rho = _resolve_rho(rho, h.dim, tol)
    return float(np.trace(c @ rho @ c.conj().T).real)


def batch_weights(histories: list[History], rho=None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorized history weights over histories sharing a slot grid."""
    if not histories:
        return np.zeros(0)
    rho = _resolve_rho(rho, histories[0].dim, tol)
    chains = kernels.chain_products(_event_stack(histories))
    return kernels.history_weights(chains, rho)


_consistency_cache: "WeakKeyDictionary[Family, dict]" = WeakKeyDictionary()


def _rho_key(rho: np.ndarray) -> bytes:
    return np.ascontiguousarray(rho).tobytes()


def is_weakly_decoherent(family: Family, rho=None, tol: float = DEFAULT_TOL,
                         cap: int = ENUMERATION_CAP) -> DecoherenceReport:
    """Full pair table over elementary histories with the consistency verdict.

    Results are memoized per (family, rho, tol); families are immutable so
    the cache is safe.
    """
    rho = _resolve_rho(rho, family.dim, tol)
    key = (_rho_key(rho), tol)
    cached = _consistency_cache.setdefault(family, {})
    if key in cached:
        return cached[key]
    elementary = enumerate_elementary(family, cap)
    chains = kernels.chain_products(_event_stack(elementary))
    table = kernels.decoherence_table(chains, rho)
    worst = kernels.max_offdiag_re(table)
    report = DecoherenceReport(
        histories=tuple(elementary),
        table=table,
        max_off_diagonal_re=worst,
        is_weakly_decoherent=bool(worst <= tol),
        tol_used=tol,
    )
    cached[key] = report
    return report


def probability(h: History, family: Family, rho=None, tol: float = DEFAULT_TOL,
                cap: int = ENUMERATION_CAP) -> float:
    """Occurrence probability Re D(h, h) inside a consistent family.

    Additive over the history's cell: p(h) equals the sum of the
    elementary probabilities below h (tested property, not re-checked per
    call).
    """
    report = is_weakly_decoherent(family, rho, tol, cap)
    if not report.is_weakly_decoherent:
        raise InconsistentFamily(
            f"family is not weakly decoherent (max |Re D| = {report.max_off_diagonal_re:.3e})")
    if history_in_family(h, family, tol) is None:
        raise HistoryNotInFamily(f"history {h.name or h.slot_labels} not in family")
    grid = common_grid(family, h)
    p = history_weight(pad_history(h, grid), _resolve_rho(rho, family.dim, tol), tol)
    if p < -tol or p > 1.0 + tol:
        raise CHError(f"probability {p} outside [-tol, 1+tol]")
    return min(max(p, 0.0), 1.0)


def conjunction(h1: History, h2: History, tol: float = DEFAULT_TOL,
                grid=None) -> History:
    """Slot-wise product history; defined when per-slot products are projectors.

    ``grid`` fixes the slot order when the histories mention disjoint
    label sets (e.g. the containing family's grid).
    """
    if grid is None:
        grid = common_grid(h1, h2)
    else:
        grid = tuple(grid)
    a, b = pad_history(h1, grid), pad_history(h2, grid)
    events = []
    for k, lab in enumerate(grid):
        prod = a.events[k].matrix @ b.events[k].matrix
        try:
            events.append(projector_from_matrix(prod, tol=tol))
        except CHError as exc:
            raise NotConjoinable(f"slot {lab}: product of events is not a projector") from exc
    return History(tuple(events), grid)


def conditional_probability(target: History, given: History, family: Family,
                            rho=None, tol: float = DEFAULT_TOL,
                            cap: int = ENUMERATION_CAP) -> float:
    """p(target and given) / p(given), conjunction taken slot-wise."""
    p_given = probability(given, family, rho, tol, cap)
    if p_given <= tol:
        raise ZeroConditioningEvent(f"conditioning probability {p_given:.3e} <= tol")
    grid = common_grid(family, target, given)
    joint = conjunction(target, given, tol, grid)
    p_joint = probability(joint, family, rho, tol, cap)
    return p_joint / p_given


# ---------------------------------------------------------------------------
# structural equality


def decomposition_equal(a: Decomposition, b: Decomposition, tol: float = DEFAULT_TOL) -> bool:
    """Equality as sets of projectors (greedy matching within tol)."""
    if a.dim != b.dim or len(a) != len(b):
        return False
    unused = list(range(len(b)))
    for m in a.members:
        hit = None
        for j in unused:
            if projector_equal(m, b.members[j], tol):
                hit = j
                break
        if hit is None:
            return False
        unused.remove(hit)
    return True


def family_equal(a: Family, b: Family, tol: float = DEFAULT_TOL) -> bool:
    """Slot-wise decomposition equality after alignment on a common grid."""
    if a.dim != b.dim:
        return False
    try:
        grid = common_grid(a, b)
    except CHError:
        return False
    a, b = pad_family(a, grid), pad_family(b, grid)
    return all(decomposition_equal(x, y, tol) for x, y in zip(a.slots, b.slots))
