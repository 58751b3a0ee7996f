"""Finite-ensemble simulation of family supports and truth functionals.

Each simulated system is assigned one maximal catalog family (drawn by
user-supplied weights) plus one realized elementary history inside it
(drawn by the occurrence probabilities). The system then "makes sense of"
exactly the catalog families that are coarse-grainings of its maximal
family; their realized elementary histories are derived by
coarse-graining. Truth values are three-valued: a history that lives in
no family the system makes sense of is neither true nor false.

This is ONE admissible membership policy, not the only conceivable one.
It is chosen because the structural properties the checkers verify
(support monotonicity under coarse-graining, family-independent
occurrence, the support partition identities, mutual exclusivity of
orthogonal events, and disjoint supports for contrary pairs) then hold by
construction, which turns the checkers into regression guards rather
than hypotheses.

The optional strict-exclusivity extension additionally makes every system
for which an event E occurs also make sense of the minimal joint family
of a declared orthogonal pair (E, F), so that F is then defined-and-false
rather than undefined.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import (
    CatalogMissingFamily,
    CHError,
    DimensionMismatch,
    InconsistentCatalogFamily,
    NotAContraryPair,
    NotOrthogonal,
    UnknownSystem,
    ZeroWeightSum,
)
from .family_algebra import are_compatible, generated_family, is_coarse_graining
from .histories import (
    Family,
    History,
    batch_weights,
    common_grid,
    enumerate_elementary,
    family_equal,
    history_in_family,
    is_weakly_decoherent,
    pad_family,
    pad_history,
    probability,
    _resolve_rho,
)
from .inference import ContraryInferenceCertificate, enumerate_family_histories, history_leq
from .linalg import DEFAULT_TOL, Projector, is_zero, leq, orthogonal

EXAMPLE_LIMIT = 20


class TruthValue(Enum):
    TRUE = "true"
    FALSE = "false"
    UNDEFINED = "undefined"


@dataclass(frozen=True, eq=False)
class SystemRecord:
    """One simulated system: its maximal family and realized history."""

    id: int
    maximal_family: int
    realized_elementary: History
    membership: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class CheckReport:
    """Outcome of one structural check over the ensemble."""

    name: str
    checked: int
    violation_count: int
    examples: tuple[dict, ...] = ()

    @property
    def ok(self) -> bool:
        return self.violation_count == 0


@dataclass(frozen=True, eq=False)
class CaseCounts:
    """Partition of the in-scope systems of a contrary-inference run.

    Systems where the outer data occurred split by which family they make
    sense of: first family (alternative event defined-false vs undefined),
    second family, or neither. ``overlap`` counts systems claimed by both
    families (must be zero) and ``anomalies`` counts truth-value
    mismatches against the certificate's retrodictions.
    """

    c1_alt_false: int
    c1_alt_undefined: int
    c2: int
    neither: int
    overlap: int
    anomalies: int
    in_scope: int

    def as_dict(self) -> dict:
        return {
            "c1_alt_false": self.c1_alt_false,
            "c1_alt_undefined": self.c1_alt_undefined,
            "c2": self.c2,
            "neither": self.neither,
            "overlap": self.overlap,
            "anomalies": self.anomalies,
            "in_scope": self.in_scope,
        }


@dataclass(frozen=True, eq=False)
class StrictExclusivityReport:
    """Clause-by-clause outcome of the strict exclusivity check."""

    joint_family_in_catalog: bool
    clause_i_violations: int
    undefined_violations: int       # E occurs but F makes no sense
    double_occurrence_violations: int
    mutual_exclusivity_ok: bool
    checked: int

    @property
    def clause_ii_violations(self) -> int:
        return self.undefined_violations + self.double_occurrence_violations

    @property
    def ok(self) -> bool:
        return (self.joint_family_in_catalog and self.clause_i_violations == 0
                and self.clause_ii_violations == 0)


@dataclass(frozen=True, eq=False)
class SupportModel:
    """Immutable simulated ensemble over a family catalog."""

    catalog: tuple[Family, ...]          # padded onto the common grid
    weights: tuple[float, ...]
    rho: np.ndarray
    seed: int
    tol: float
    grid: tuple[str, ...]
    elementary: tuple[tuple[History, ...], ...]
    probs: tuple[np.ndarray, ...]
    refines: np.ndarray                  # refines[c, m]: catalog[c] coarsens catalog[m]
    cell_maps: dict
    maximal: np.ndarray                  # (n,) family index per system
    realized: np.ndarray                 # (n, F) elementary index per family, -1 = no sense
    extended: np.ndarray | None = None   # (n, F) True where membership is extension-added
    strict_pairs: tuple = ()
    extension_skipped: int = 0

    @property
    def n_systems(self) -> int:
        return int(self.maximal.shape[0])

    @property
    def n_families(self) -> int:
        return len(self.catalog)

    def family_name(self, c: int) -> str:
        return self.catalog[c].name or f"family_{c}"

    def support_mask(self, c: int) -> np.ndarray:
        """Boolean mask of systems that make sense of catalog family ``c``."""
        return self.realized[:, c] >= 0

    def system(self, system_id: int) -> SystemRecord:
        if not (0 <= system_id < self.n_systems):
            raise UnknownSystem(f"system id {system_id} outside [0, {self.n_systems})")
        m = int(self.maximal[system_id])
        e = int(self.realized[system_id, m])
        membership = tuple(int(c) for c in range(self.n_families)
                           if self.realized[system_id, c] >= 0)
        return SystemRecord(system_id, m, self.elementary[m][e], membership)

    @cached_property
    def systems(self) -> list[SystemRecord]:
        return [self.system(i) for i in range(self.n_systems)]

    @cached_property
    def _membership_tables(self) -> dict:
        """Cache keyed by (kind, family index, id(history)).

        Entries keep a strong reference to the keyed history: ids must
        stay unique for the lifetime of the cache.
        """
        return {}

    def _contains(self, c: int, h: History) -> bool:
        key = ("contains", c, id(h))
        cache = self._membership_tables
        if key not in cache:
            cache[key] = (h, history_in_family(h, self.catalog[c], self.tol) is not None)
        return cache[key][1]

    def _status_table(self, c: int, h: History) -> np.ndarray:
        """Per-elementary occurrence flags of ``h`` inside family ``c``."""
        key = ("status", c, id(h))
        cache = self._membership_tables
        if key not in cache:
            table = np.array(
                [history_leq(e, h, self.tol) for e in self.elementary[c]], dtype=bool)
            cache[key] = (h, table)
        return cache[key][1]

    def occurrence_vectors(self, h: History) -> tuple[np.ndarray, np.ndarray]:
        """(defined, occurs) boolean vectors of ``h`` over all systems."""
        n = self.n_systems
        defined = np.zeros(n, dtype=bool)
        occurs = np.zeros(n, dtype=bool)
        for c in range(self.n_families):
            if not self._contains(c, h):
                continue
            member = self.support_mask(c)
            status = self._status_table(c, h)
            defined |= member
            idx = self.realized[member, c]
            occ = np.zeros(n, dtype=bool)
            occ[member] = status[idx]
            occurs |= occ
        return defined, occurs


def _elem_index_arrays(family: Family) -> tuple[int, ...]:
    return tuple(len(d) for d in family.slots)


def _compose_cell_map(fine: Family, coarse: Family, witness,
                      fine_sizes, coarse_sizes) -> np.ndarray:
    """Map each elementary index of ``fine`` to its cell in ``coarse``."""
    n_fine = int(np.prod(fine_sizes))
    member_maps = []
    for k, slot_witness in enumerate(witness):
        m = np.full(fine_sizes[k], -1, dtype=np.int64)
        for coarse_i, subset in enumerate(slot_witness):
            for fine_j in subset:
                m[fine_j] = coarse_i
        member_maps.append(m)
    fine_multi = np.unravel_index(np.arange(n_fine), fine_sizes)
    coarse_multi = [member_maps[k][fine_multi[k]] for k in range(len(fine_sizes))]
    if any((cm < 0).any() for cm in coarse_multi):
        raise CHError("coarse-graining witness does not cover all fine members")
    return np.ravel_multi_index(tuple(coarse_multi), coarse_sizes).astype(np.int64)


def build_support_model(catalog, weights, ensemble_size: int, rho=None,
                        seed: int = 0, tol: float = DEFAULT_TOL,
                        exclusivity_pairs=None) -> SupportModel:
    """Simulate an ensemble of systems over a catalog of consistent families.

    ``weights`` are the (unnormalized) probabilities of each family being
    a system's maximal family. ``exclusivity_pairs`` is a list of
    ``(e, f, slot_label)`` triples enabling the strict-exclusivity
    membership extension for those orthogonal event pairs.
    """
    catalog = list(catalog)
    if not catalog:
        raise CHError("catalog must be non-empty")
    w = np.asarray(list(weights), dtype=float)
    if w.shape != (len(catalog),):
        raise CHError(f"{len(catalog)} families but {w.size} weights")
    if (w < 0).any():
        raise CHError("weights must be non-negative")
    if w.sum() <= 0:
        raise ZeroWeightSum("catalog weights sum to zero")
    if ensemble_size < 0:
        raise CHError("ensemble_size must be >= 0")
    dims = {f.dim for f in catalog}
    if len(dims) != 1:
        raise DimensionMismatch("catalog families have mixed dimensions")
    dim = dims.pop()
    rho = _resolve_rho(rho, dim, tol)

    grid = common_grid(*catalog)
    padded = tuple(pad_family(f, grid) for f in catalog)
    n_fam = len(padded)

    elementary = []
    probs = []
    for i, fam in enumerate(padded):
        rep = is_weakly_decoherent(fam, rho, tol)
        if not rep.is_weakly_decoherent:
            raise InconsistentCatalogFamily(
                f"catalog family {fam.name or i} is not weakly decoherent "
                f"(max |Re D| = {rep.max_off_diagonal_re:.3e})")
        elems = tuple(enumerate_elementary(fam))
        p = np.clip(batch_weights(list(elems), rho, tol), 0.0, None)
        total = p.sum()
        if abs(total - 1.0) > 1e-6:
            raise CHError(f"family {fam.name or i}: elementary probabilities sum to {total}")
        elementary.append(elems)
        probs.append(p / total)

    sizes = [_elem_index_arrays(f) for f in padded]
    refines = np.zeros((n_fam, n_fam), dtype=bool)
    cell_maps: dict = {}
    for c in range(n_fam):
        for m in range(n_fam):
            result = is_coarse_graining(padded[c], padded[m], tol)
            refines[c, m] = result.is_coarse_graining
            if result.is_coarse_graining:
                cell_maps[(m, c)] = _compose_cell_map(
                    padded[m], padded[c], result.witness, sizes[m], sizes[c])

    rng = np.random.default_rng(seed)
    maximal = rng.choice(n_fam, size=ensemble_size, p=w / w.sum()).astype(np.int16)
    realized = np.full((ensemble_size, n_fam), -1, dtype=np.int32)
    for m in range(n_fam):
        idx = np.nonzero(maximal == m)[0]
        if idx.size == 0:
            continue
        draws = rng.choice(len(elementary[m]), size=idx.size, p=probs[m])
        for c in range(n_fam):
            if refines[c, m]:
                realized[idx, c] = cell_maps[(m, c)][draws]

    model = SupportModel(
        catalog=padded, weights=tuple(float(x) for x in w), rho=rho, seed=seed,
        tol=tol, grid=grid, elementary=tuple(elementary), probs=tuple(probs),
        refines=refines, cell_maps=cell_maps, maximal=maximal, realized=realized,
    )
    if exclusivity_pairs:
        model = _apply_strict_exclusivity(model, list(exclusivity_pairs))
    model.maximal.setflags(write=False)
    model.realized.setflags(write=False)
    return model


def find_catalog_family(model: SupportModel, fam: Family) -> int | None:
    """Index of the catalog family numerically equal to ``fam``, if any."""
    for i, c in enumerate(model.catalog):
        if family_equal(c, fam, model.tol):
            return i
    return None


def abstract_support(model: SupportModel, fam: Family) -> np.ndarray:
    """Mask of systems making sense of ``fam`` under the closure policy.

    A system abstractly supports any family that coarse-grains one of its
    stored (catalog) memberships, whether or not that family is itself a
    catalog entry.
    """
    out = np.zeros(model.n_systems, dtype=bool)
    for c in range(model.n_families):
        if is_coarse_graining(fam, model.catalog[c], model.tol).is_coarse_graining:
            out |= model.support_mask(c)
    return out


def _derive_elementary_index(model: SupportModel, target: int,
                             realized_events: History) -> int | None:
    """Elementary index of ``target`` whose events dominate the realized ones."""
    fam = model.catalog[target]
    member_idx = []
    for k, d in enumerate(fam.slots):
        hit = None
        for i, mem in enumerate(d.members):
            if leq(realized_events.events[k], mem, model.tol):
                hit = i
                break
        if hit is None:
            return None
        member_idx.append(hit)
    return int(np.ravel_multi_index(tuple(member_idx), _elem_index_arrays(fam)))


def _apply_strict_exclusivity(model: SupportModel, pairs) -> SupportModel:
    """Extend memberships so that occurring events make their partner defined.

    Extension-added memberships are post-selected on the occurrence of one
    event, so they are marked in ``extended`` and left out of frequency
    comparisons (their composition is intentionally biased).
    """
    realized = model.realized.copy()
    extended = np.zeros_like(realized, dtype=bool)
    skipped = 0
    applied = []
    for e, f, slot_label in pairs:
        if not orthogonal(e, f, model.tol):
            raise NotOrthogonal("strict-exclusivity pair is not orthogonal")
        h_e = History((e,), (slot_label,), e.label)
        h_f = History((f,), (slot_label,), f.label)
        joint = generated_family([h_e, h_f], model.tol)
        j_idx = find_catalog_family(model, joint)
        applied.append((e, f, slot_label))
        if j_idx is None:
            continue  # nothing to extend onto; strict check will report this
        for h_occ in (h_e, h_f):
            _, occurs = model.occurrence_vectors(h_occ)
            need = occurs & (realized[:, j_idx] < 0)
            if not need.any():
                continue
            # systems in one (maximal, drawn) group share the derived index
            groups = {}
            for s in np.nonzero(need)[0]:
                m = int(model.maximal[s])
                key = (m, int(realized[s, m]))
                groups.setdefault(key, []).append(s)
            for (m, drawn), members in groups.items():
                j_elem = _derive_elementary_index(
                    model, j_idx, model.elementary[m][drawn])
                if j_elem is None:
                    skipped += len(members)
                    continue
                rows = np.array(members)
                for c in range(model.n_families):
                    if model.refines[c, j_idx]:
                        val = model.cell_maps[(j_idx, c)][j_elem]
                        col = realized[rows, c]
                        extended[rows, c] |= col < 0
                        realized[rows, c] = np.where(col < 0, val, col)
    return SupportModel(
        catalog=model.catalog, weights=model.weights, rho=model.rho,
        seed=model.seed, tol=model.tol, grid=model.grid,
        elementary=model.elementary, probs=model.probs, refines=model.refines,
        cell_maps=model.cell_maps, maximal=model.maximal, realized=realized,
        extended=extended, strict_pairs=tuple(applied), extension_skipped=skipped,
    )


# ---------------------------------------------------------------------------
# truth functionals


def truth_functional(model: SupportModel, system_id: int, h: History) -> TruthValue:
    """Three-valued truth of ``h`` for one system.

    TRUE/FALSE when some family the system makes sense of contains ``h``
    (the realized elementary history decides which); UNDEFINED otherwise.
    """
    if not (0 <= system_id < model.n_systems):
        raise UnknownSystem(f"system id {system_id} outside [0, {model.n_systems})")
    for c in range(model.n_families):
        if model.realized[system_id, c] < 0 or not model._contains(c, h):
            continue
        status = model._status_table(c, h)
        return TruthValue.TRUE if status[model.realized[system_id, c]] else TruthValue.FALSE
    return TruthValue.UNDEFINED


def truth_domain_contains(model: SupportModel, system_id: int, h: History) -> bool:
    """Whether ``h`` lies in the system's truth-functional domain."""
    return truth_functional(model, system_id, h) is not TruthValue.UNDEFINED


# ---------------------------------------------------------------------------
# structural checkers


def _examples(ids, **fields) -> tuple[dict, ...]:
    out = []
    for s in ids[:EXAMPLE_LIMIT]:
        d = {"system": int(s)}
        d.update(fields)
        out.append(d)
    return tuple(out)


def check_support_monotonicity(model: SupportModel) -> CheckReport:
    """Coarser families must be made sense of whenever a finer one is.

    For every catalog pair with ``c1`` a coarse-graining of ``c2``, every
    system supporting ``c2`` must support ``c1``.
    """
    checked = 0
    violations = 0
    examples: list[dict] = []
    for c1 in range(model.n_families):
        for c2 in range(model.n_families):
            if c1 == c2 or not model.refines[c1, c2]:
                continue
            checked += 1
            bad = np.nonzero(model.support_mask(c2) & ~model.support_mask(c1))[0]
            violations += bad.size
            if bad.size and len(examples) < EXAMPLE_LIMIT:
                examples.extend(_examples(
                    bad, coarse=model.family_name(c1), fine=model.family_name(c2)))
    return CheckReport("support_monotonicity", checked, violations,
                       tuple(examples[:EXAMPLE_LIMIT]))


def check_occurrence_agreement(model: SupportModel, cap: int = 10**5) -> CheckReport:
    """A shared history must have one status for a system supporting both families."""
    checked = 0
    violations = 0
    examples: list[dict] = []
    for c1, c2 in itertools.combinations(range(model.n_families), 2):
        both = model.support_mask(c1) & model.support_mask(c2)
        if not both.any():
            continue
        idx1 = model.realized[both, c1]
        idx2 = model.realized[both, c2]
        ids = np.nonzero(both)[0]
        for h in enumerate_family_histories(model.catalog[c1], cap):
            if history_in_family(h, model.catalog[c2], model.tol) is None:
                continue
            checked += 1
            s1 = model._status_table(c1, h)[idx1]
            s2 = model._status_table(c2, h)[idx2]
            bad = np.nonzero(s1 != s2)[0]
            violations += bad.size
            if bad.size and len(examples) < EXAMPLE_LIMIT:
                examples.extend(_examples(
                    ids[bad], history=h.name or "?",
                    family_a=model.family_name(c1), family_b=model.family_name(c2)))
    return CheckReport("occurrence_agreement", checked, violations,
                       tuple(examples[:EXAMPLE_LIMIT]))


def check_support_partition(model: SupportModel) -> CheckReport:
    """Occurrence cells of elementary histories partition each family's support.

    Verified on the stored records: inside a support every system carries
    exactly one valid elementary index, outside it carries the no-sense
    marker; the cells are then automatically disjoint and exhaustive.
    """
    checked = 0
    violations = 0
    examples: list[dict] = []
    for c in range(model.n_families):
        col = model.realized[:, c]
        checked += col.size
        bad = np.nonzero((col < -1) | (col >= len(model.elementary[c])))[0]
        violations += bad.size
        if bad.size and len(examples) < EXAMPLE_LIMIT:
            examples.extend(_examples(bad, family=model.family_name(c)))
        member = col >= 0
        cell_sizes = np.bincount(col[member], minlength=len(model.elementary[c]))
        if int(cell_sizes.sum()) != int(member.sum()):
            violations += 1
            examples.append({"family": model.family_name(c), "reason": "cells_do_not_cover"})
    return CheckReport("support_partition", checked, violations,
                       tuple(examples[:EXAMPLE_LIMIT]))


def check_contrary_supports_disjoint(model: SupportModel, c1_idx: int, c2_idx: int,
                                     h0: History) -> bool:
    """No system may combine the outer data with support for both families.

    The pair is first re-verified as a genuine contrary-inference pair:
    ``h0`` in both families with positive probability, the conditional
    retrodictions concentrated on single elementary histories whose
    middle events are orthogonal, and the two families incompatible.
    """
    for c in (c1_idx, c2_idx):
        if not (0 <= c < model.n_families):
            raise CHError(f"catalog index {c} out of range")
    if c1_idx == c2_idx:
        raise NotAContraryPair("the two families are identical")
    fam1, fam2 = model.catalog[c1_idx], model.catalog[c2_idx]
    dominant = []
    for c_idx, fam in ((c1_idx, fam1), (c2_idx, fam2)):
        witness = history_in_family(h0, fam, model.tol)
        if witness is None:
            raise NotAContraryPair(f"h0 is not a history of {model.family_name(c_idx)}")
        p0 = probability(h0, fam, model.rho, model.tol)
        if p0 <= model.tol:
            raise NotAContraryPair("h0 has zero probability")
        h0p = pad_history(h0, model.grid)
        status = model._status_table(c_idx, h0p)
        cell_probs = np.where(status, model.probs[c_idx], 0.0)
        best = int(cell_probs.argmax())
        if abs(cell_probs[best] / p0 - 1.0) > model.tol:
            raise NotAContraryPair(
                f"{model.family_name(c_idx)} does not retrodict a unique history from h0")
        dominant.append(model.elementary[c_idx][best])
    contrary_slot = None
    for k in range(len(model.grid)):
        if orthogonal(dominant[0].events[k], dominant[1].events[k], model.tol) \
                and not is_zero(dominant[0].events[k], model.tol) \
                and not is_zero(dominant[1].events[k], model.tol):
            contrary_slot = k
            break
    if contrary_slot is None:
        raise NotAContraryPair("retrodicted histories share no orthogonal slot events")
    if are_compatible(fam1, fam2, model.rho, model.tol).compatible:
        raise NotAContraryPair("families are compatible")
    _, occurs = model.occurrence_vectors(pad_history(h0, model.grid))
    clash = occurs & model.support_mask(c1_idx) & model.support_mask(c2_idx)
    return not bool(clash.any())


def classify_support_cases(model: SupportModel,
                           cert: ContraryInferenceCertificate) -> CaseCounts:
    """Partition the systems where the certificate's outer data occurred.

    Scope: systems with the outer-data history true that support the
    first family, the second family, or the outer-data family. Classes:
    first-family systems split by whether the alternative middle event is
    defined (and then false) or undefined; second-family systems; systems
    supporting only the outer-data family.
    """
    h0 = cert.h0()
    i1 = find_catalog_family(model, cert.family_c1)
    i2 = find_catalog_family(model, cert.family_c2)
    i0 = find_catalog_family(model, generated_family([h0], model.tol))
    missing = [name for name, idx in
               (("first", i1), ("second", i2), ("outer-data", i0)) if idx is None]
    if missing:
        raise CatalogMissingFamily(f"catalog lacks required families: {missing}")
    mid_label = cert.family_c1.slot_labels[1]
    h_e = History((cert.e1,), (mid_label,), cert.e1.label)
    h_f = History((cert.f1,), (mid_label,), cert.f1.label)

    _, occurs_h0 = model.occurrence_vectors(pad_history(h0, model.grid))
    def_e, occ_e = model.occurrence_vectors(h_e)
    def_f, occ_f = model.occurrence_vectors(h_f)

    m1 = model.support_mask(i1)
    m2 = model.support_mask(i2)
    m0 = model.support_mask(i0)
    scope = occurs_h0 & (m1 | m2 | m0)

    p_mask = scope & m1
    q_mask = scope & m2 & ~m1
    overlap = int((scope & m1 & m2).sum())
    r_mask = scope & ~m1 & ~m2

    anomalies = int((p_mask & ~occ_e).sum())          # first family must imply e1 occurs
    anomalies += int((q_mask & ~occ_f).sum())         # second family must imply f1 occurs
    anomalies += int((p_mask & def_f & occ_f).sum())  # defined alternative must be false

    p1 = int((p_mask & def_f).sum())
    p2 = int((p_mask & ~def_f).sum())
    return CaseCounts(
        c1_alt_false=p1, c1_alt_undefined=p2, c2=int(q_mask.sum()),
        neither=int(r_mask.sum()), overlap=overlap, anomalies=anomalies,
        in_scope=int(scope.sum()))


def check_mutual_exclusivity(model: SupportModel, e: Projector, f: Projector,
                             slot_label: str) -> bool:
    """Orthogonal events never both occur, and joint sense implies joint family.

    True iff no system has both events true, and every system for which
    both events make sense supports the minimal family containing both.
    """
    if not orthogonal(e, f, model.tol):
        raise NotOrthogonal("events are not orthogonal")
    h_e = History((e,), (slot_label,), e.label)
    h_f = History((f,), (slot_label,), f.label)
    def_e, occ_e = model.occurrence_vectors(h_e)
    def_f, occ_f = model.occurrence_vectors(h_f)
    if bool((occ_e & occ_f).any()):
        return False
    both_defined = def_e & def_f
    if not both_defined.any():
        return True
    joint = generated_family([h_e, h_f], model.tol)
    return bool(np.all(abstract_support(model, joint)[both_defined]))


def check_strict_exclusivity(model: SupportModel, e: Projector, f: Projector,
                             slot_label: str) -> StrictExclusivityReport:
    """Occurrence of one event must make the orthogonal partner false.

    Clause (i): joint sense implies support of the minimal joint family.
    Clause (ii): whenever ``e`` occurs, ``f`` must be defined and false
    (and symmetrically); systems where the partner is undefined are the
    violations the strict-exclusivity extension removes.
    """
    if not orthogonal(e, f, model.tol):
        raise NotOrthogonal("events are not orthogonal")
    h_e = History((e,), (slot_label,), e.label)
    h_f = History((f,), (slot_label,), f.label)
    def_e, occ_e = model.occurrence_vectors(h_e)
    def_f, occ_f = model.occurrence_vectors(h_f)

    joint = generated_family([h_e, h_f], model.tol)
    j_idx = find_catalog_family(model, joint)
    both_defined = def_e & def_f
    in_joint = abstract_support(model, joint)
    clause_i = int((both_defined & ~in_joint).sum())

    undefined = int((occ_e & ~def_f).sum()) + int((occ_f & ~def_e).sum())
    double = int((occ_e & occ_f).sum())
    return StrictExclusivityReport(
        joint_family_in_catalog=j_idx is not None,
        clause_i_violations=clause_i,
        undefined_violations=undefined,
        double_occurrence_violations=double,
        mutual_exclusivity_ok=double == 0,
        checked=model.n_systems,
    )


# ---------------------------------------------------------------------------
# frequencies and export


@dataclass(frozen=True, eq=False)
class FrequencyReport:
    """Observed vs predicted elementary frequencies per family support."""

    rows: tuple[dict, ...]
    all_within_3sigma: bool
    all_within_band: bool


def frequency_report(model: SupportModel, min_expected: float = 20.0,
                     band_factor: float = 5.0) -> FrequencyReport:
    """Compare elementary frequencies inside each support with predictions.

    The 3-sigma binomial test applies to histories with expected count at
    least ``min_expected``; the coarser ``band_factor / sqrt(n)`` bound on
    absolute frequency deviation applies whenever n >= 1000.
    """
    rows = []
    ok3, okb = True, True
    for c in range(model.n_families):
        member = model.support_mask(c)
        if model.extended is not None:
            member = member & ~model.extended[:, c]
        n = int(member.sum())
        if n == 0:
            continue
        counts = np.bincount(model.realized[member, c],
                             minlength=len(model.elementary[c]))
        for k, h in enumerate(model.elementary[c]):
            p = float(model.probs[c][k])
            expected = n * p
            sigma = float(np.sqrt(n * p * (1.0 - p)))
            row = {
                "family": model.family_name(c),
                "history": h.name or str(k),
                "support_size": n,
                "observed": int(counts[k]),
                "probability": p,
                "expected": expected,
            }
            if expected >= min_expected:
                within = abs(counts[k] - expected) <= 3.0 * sigma
                row["within_3sigma"] = bool(within)
                ok3 &= bool(within)
            if n >= 1000:
                within_band = abs(counts[k] / n - p) <= band_factor / np.sqrt(n)
                row["within_band"] = bool(within_band)
                okb &= bool(within_band)
            rows.append(row)
    return FrequencyReport(tuple(rows), ok3, okb)


def export_systems(model: SupportModel, stream) -> int:
    """Write one tab-separated line per system: id, maximal family, realized history."""
    written = 0
    for i in range(model.n_systems):
        m = int(model.maximal[i])
        e = int(model.realized[i, m])
        label = model.elementary[m][e].name or str(e)
        stream.write(f"{i}\t{model.family_name(m)}\t{label}\n")
        written += 1
    return written
