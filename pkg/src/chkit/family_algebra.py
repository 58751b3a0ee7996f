"""Generated families, the coarse-graining order, and compatibility.

Families are ordered by coarse-graining: ``c1`` is coarser than ``c2``
when every member of every slot of ``c1`` is a sum of members of the
matching slot of ``c2``. Slot grids are reconciled by padding missing
slots with the trivial decomposition, so a two-slot history can live
inside three-slot families.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CHError, DimensionMismatch, InconsistentFamily, NonCommutingSlot
from .histories import (
    Decomposition,
    Family,
    History,
    common_grid,
    history_in_family,
    is_weakly_decoherent,
    merge_slot_labels,
    pad_family,
    pad_history,
    validate_decomposition,
    _slot_member_subset,
)
from .linalg import (
    DEFAULT_TOL,
    Projector,
    commutes,
    entry_sort_key,
    identity_projector,
    is_zero,
    leq,
    max_abs,
    orthogonal,
    projector_equal,
    projector_from_matrix,
)


@dataclass(frozen=True, eq=False)
class FamilyOrderResult:
    """Outcome of a coarse-graining test with its per-slot witness."""

    is_coarse_graining: bool
    # witness[k][i] = indices of fine members summing to coarse member i of slot k
    witness: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    failing_slot: int | None = None


REASON_COMPATIBLE = "Compatible"
REASON_NON_COMMUTING = "NonCommutingSlot"
REASON_REFINEMENT_INCONSISTENT = "RefinementInconsistent"


@dataclass(frozen=True, eq=False)
class CompatibilityResult:
    """Whether two consistent families embed in a common consistent one."""

    compatible: bool
    refined_family: Family | None
    reason: str
    failing_slot: int | None = None


def is_coarse_graining(c1: Family, c2: Family, tol: float = DEFAULT_TOL) -> FamilyOrderResult:
    """True iff every member of c1's slots is a sum of c2's slot members."""
    if c1.dim != c2.dim:
        raise DimensionMismatch("families live on different dimensions")
    grid = common_grid(c2, c1)
    a, b = pad_family(c1, grid), pad_family(c2, grid)
    witness = []
    for k, (coarse, fine) in enumerate(zip(a.slots, b.slots)):
        slot_witness = []
        used: set[int] = set()
        for m in coarse.members:
            subset = _slot_member_subset(m, fine, tol)
            if subset is None or used.intersection(subset):
                return FamilyOrderResult(False, None, k)
            used.update(subset)
            slot_witness.append(subset)
        nonzero = {i for i, m in enumerate(fine.members) if m.rank > 0}
        if not nonzero.issubset(used):
            return FamilyOrderResult(False, None, k)
        witness.append(tuple(slot_witness))
    return FamilyOrderResult(True, tuple(witness), None)


def _refine_parts(parts: list[Projector], generator: Projector,
                  tol: float) -> list[Projector]:
    """Split each part by a commuting generator, dropping zero pieces."""
    out = []
    for p in parts:
        inside = p.matrix @ generator.matrix
        outside = p.matrix - inside
        for piece in (inside, outside):
            if max_abs(piece) <= tol:
                continue
            out.append(projector_from_matrix(piece, tol=tol))
    return out


def _atom_label(atom: Projector, generators: list[Projector], tol: float) -> str:
    parts = []
    for i, g in enumerate(generators):
        name = g.label or f"g{i}"
        if leq(atom, g, tol):
            parts.append(name)
        else:
            parts.append(f"~{name}")
    return "&".join(parts) if parts else "1"


def slot_atoms(generators, tol: float = DEFAULT_TOL, dim: int | None = None) -> Decomposition:
    """Atoms of the Boolean algebra generated by commuting projectors.

    All nonzero products of each generator or its complement, ordered
    deterministically (lexicographic over rounded entries). With no
    generators the result is the trivial decomposition.
    """
    gens = list(generators)
    if dim is None:
        if not gens:
            raise CHError("slot_atoms needs generators or an explicit dim")
        dim = gens[0].dim
    for i in range(len(gens)):
        if gens[i].dim != dim:
            raise DimensionMismatch("generators have mixed dimensions")
        for j in range(i + 1, len(gens)):
            if not commutes(gens[i], gens[j], tol):
                raise NonCommutingSlot(
                    f"generators {i} and {j} do not commute", slot=0, i=i, j=j)
    # identity/zero generators refine nothing; skip them for cleaner labels
    effective = [g for g in gens
                 if not is_zero(g, tol) and not projector_equal(g, identity_projector(dim), tol)]
    parts: list[Projector] = [identity_projector(dim)]
    for g in effective:
        parts = _refine_parts(parts, g, tol)
    parts.sort(key=lambda p: entry_sort_key(p.matrix))
    labelled = tuple(p.relabel(_atom_label(p, effective, tol)) for p in parts)
    return validate_decomposition(labelled, tol)


def atoms_of(projector_sets, tol: float = DEFAULT_TOL,
             dim: int | None = None) -> tuple[Decomposition, ...]:
    """Per-slot atoms for several slots at once."""
    out = []
    for k, gens in enumerate(projector_sets):
        try:
            out.append(slot_atoms(gens, tol, dim))
        except NonCommutingSlot as exc:
            raise NonCommutingSlot(f"slot {k}: {exc}", slot=k, i=exc.i, j=exc.j) from None
    return tuple(out)


def generated_family(histories, tol: float = DEFAULT_TOL, name: str | None = None) -> Family:
    """Smallest family containing every given history.

    Slot k of the result is the atom decomposition generated by the slot-k
    events of all inputs (histories are identity-padded onto the merged
    time grid first). Containment of each input is re-verified.
    """
    hs = list(histories)
    if not hs:
        raise CHError("generated_family needs at least one history")
    grid: tuple[str, ...] = ()
    for h in hs:
        grid = merge_slot_labels(grid, h.slot_labels)
    padded = [pad_history(h, grid) for h in hs]
    dim = padded[0].dim
    slots = []
    for k in range(len(grid)):
        gens = []
        for h in padded:
            e = h.events[k]
            if not any(projector_equal(e, g, tol) for g in gens):
                gens.append(e)
        try:
            slots.append(slot_atoms(gens, tol, dim))
        except NonCommutingSlot as exc:
            raise NonCommutingSlot(
                f"slot {grid[k]}: events of the generating histories do not commute",
                slot=k, i=exc.i, j=exc.j) from None
    fam = Family(tuple(slots), grid, name)
    for h in padded:
        if history_in_family(h, fam, tol) is None:
            raise CHError("internal error: generated family does not contain an input history")
    return fam


def common_refinement(c1: Family, c2: Family, tol: float = DEFAULT_TOL,
                      name: str | None = None) -> Family:
    """Slot-wise atoms of the union of both decompositions."""
    if c1.dim != c2.dim:
        raise DimensionMismatch("families live on different dimensions")
    grid = common_grid(c1, c2)
    a, b = pad_family(c1, grid), pad_family(c2, grid)
    slots = []
    for k in range(len(grid)):
        gens = list(a.slots[k].members) + list(b.slots[k].members)
        try:
            slots.append(slot_atoms(gens, tol, c1.dim))
        except NonCommutingSlot as exc:
            raise NonCommutingSlot(
                f"slot {grid[k]}: decompositions do not commute", slot=k, i=exc.i, j=exc.j
            ) from None
    return Family(tuple(slots), grid, name)


def are_compatible(c1: Family, c2: Family, rho=None, tol: float = DEFAULT_TOL) -> CompatibilityResult:
    """Decide whether a common consistent family containing both exists.

    Any family containing both must, slot by slot, refine both
    decompositions, and weak decoherence is inherited by coarse-grainings
    (off-diagonal entries of a coarse pair table are sums of fine
    off-diagonal entries). The minimal common refinement therefore decides
    compatibility: it exists iff the slot unions commute, and a containing
    consistent family exists iff that refinement is itself consistent.
    """
    for f in (c1, c2):
        rep = is_weakly_decoherent(f, rho, tol)
        if not rep.is_weakly_decoherent:
            raise InconsistentFamily(
                f"input family {f.name or '?'} is not weakly decoherent")
    try:
        refined = common_refinement(c1, c2, tol)
    except NonCommutingSlot as exc:
        return CompatibilityResult(False, None, REASON_NON_COMMUTING, exc.slot)
    rep = is_weakly_decoherent(refined, rho, tol)
    if not rep.is_weakly_decoherent:
        return CompatibilityResult(False, refined, REASON_REFINEMENT_INCONSISTENT, None)
    return CompatibilityResult(True, refined, REASON_COMPATIBLE, None)
