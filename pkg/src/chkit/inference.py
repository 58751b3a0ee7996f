"""Contrary-inference certificates, the three-box fixture, and ordered consistency.

A contrary-inference certificate records two orthogonal middle events
that are each retrodicted with probability one from the same outer data
(first and last event) inside two different consistent families. The
three-box fixture is the canonical dimension-3 instance.

Ordered consistency strengthens plain consistency: a history fails it
when some slot-wise larger history (in any catalog family) carries a
strictly smaller weight ``Tr(C_h rho C_h^dagger)``. The verdict here is
explicitly relative to a finite family catalog; quantifying over all
consistent families is not decidable numerically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CHError,
    ConditionFailed,
    DimensionMismatch,
    ExplosionGuard,
    HistoryNotInAnyConsistentFamily,
    InconsistentFamily,
    NotOrthogonal,
)
from .family_algebra import generated_family
from .histories import (
    Family,
    History,
    Scenario,
    batch_weights,
    common_grid,
    history_in_family,
    history_weight,
    is_weakly_decoherent,
    pad_history,
    probability,
    validate_decomposition,
    _resolve_rho,
)
from .linalg import (
    DEFAULT_TOL,
    Projector,
    complement,
    identity_projector,
    leq,
    maximally_mixed,
    orthogonal,
    projector_from_vectors,
)

DEFAULT_SLOT_LABELS = ("t1", "t2", "t3")
HISTORY_ENUM_CAP = 10**5
MARGINAL_FACTOR = 100.0


@dataclass(frozen=True, eq=False)
class ContraryInferenceCertificate:
    """Verified quadruple (e0, e1, f1, e2) with its two families.

    ``marginal`` certificates satisfy the conditions only within
    ``MARGINAL_FACTOR * tol`` and are excluded from verified search
    results by default.
    """

    e0: Projector
    e1: Projector
    f1: Projector
    e2: Projector
    family_c1: Family
    family_c2: Family
    p_joint: float
    cond_c1: float
    cond_c2: float
    rho: np.ndarray
    tol: float
    marginal: bool = False
    trial: int | None = None

    @property
    def dim(self) -> int:
        return self.e0.dim

    def h0(self) -> History:
        ident = identity_projector(self.dim)
        return History((self.e0, ident, self.e2), DEFAULT_SLOT_LABELS, "h0")


@dataclass(frozen=True, eq=False)
class OrderedConsistencyVerdict:
    """Catalog-relative ordered-consistency outcome for one history."""

    history: History
    ordered_consistent: bool
    violating_pair: tuple[History, Family] | None = None
    weight: float = 0.0
    violating_weight: float | None = None


def check_contrary_quadruple(e0: Projector, e1: Projector, f1: Projector, e2: Projector,
                             rho=None, tol: float = DEFAULT_TOL,
                             slot_labels=DEFAULT_SLOT_LABELS) -> ContraryInferenceCertificate:
    """Verify the contrary-inference conditions for one event quadruple.

    Builds the two generated three-slot families, checks both are weakly
    decoherent, that the outer pair has nonzero probability, and that each
    middle event is conditionally certain in its own family. Raises
    :class:`ConditionFailed` listing every failed condition otherwise.
    """
    for p in (e1, f1, e2):
        if p.dim != e0.dim:
            raise DimensionMismatch("quadruple projectors have mixed dimensions")
    if not orthogonal(e1, f1, tol):
        raise NotOrthogonal("middle events e1 and f1 are not orthogonal")
    labels = tuple(slot_labels)
    rho = _resolve_rho(rho, e0.dim, tol)
    ident = identity_projector(e0.dim)

    h1 = History((e0, e1, e2), labels, "h1")
    h2 = History((e0, f1, e2), labels, "h2")
    h0 = History((e0, ident, e2), labels, "h0")
    c1 = generated_family([h1], tol, name="C1(e0,e1,e2)")
    c2 = generated_family([h2], tol, name="C2(e0,f1,e2)")

    rep1 = is_weakly_decoherent(c1, rho, tol)
    rep2 = is_weakly_decoherent(c2, rho, tol)
    p_joint = history_weight(h0, rho, tol)
    failed: list[str] = []
    values: dict[str, float] = {
        "max_offdiag_re_c1": rep1.max_off_diagonal_re,
        "max_offdiag_re_c2": rep2.max_off_diagonal_re,
        "p_joint": p_joint,
    }
    if not rep1.is_weakly_decoherent:
        failed.append("family_c1_consistent")
    if not rep2.is_weakly_decoherent:
        failed.append("family_c2_consistent")
    if p_joint <= tol:
        failed.append("p_joint_positive")
        raise ConditionFailed("contrary-inference conditions failed", failed, values)
    cond_c1 = history_weight(h1, rho, tol) / p_joint
    cond_c2 = history_weight(h2, rho, tol) / p_joint
    values["cond_c1"] = cond_c1
    values["cond_c2"] = cond_c2
    if abs(cond_c1 - 1.0) > tol:
        failed.append("cond_c1_is_one")
    if abs(cond_c2 - 1.0) > tol:
        failed.append("cond_c2_is_one")
    if failed:
        raise ConditionFailed("contrary-inference conditions failed", failed, values)
    return ContraryInferenceCertificate(
        e0=e0, e1=e1, f1=f1, e2=e2, family_c1=c1, family_c2=c2,
        p_joint=p_joint, cond_c1=cond_c1, cond_c2=cond_c2,
        rho=rho, tol=tol)


def verify_certificate(cert: ContraryInferenceCertificate) -> ContraryInferenceCertificate:
    """Re-verify a certificate from scratch (families rebuilt from the quadruple)."""
    return check_contrary_quadruple(
        cert.e0, cert.e1, cert.f1, cert.e2, cert.rho, cert.tol,
        cert.family_c1.slot_labels)


def _haar_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _random_projector(rng: np.random.Generator, dim: int, rank: int,
                      tol: float, avoid: Projector | None = None) -> Projector | None:
    """Random rank-r projector, optionally inside the complement of ``avoid``."""
    vs = []
    for _ in range(rank):
        for _attempt in range(8):
            v = _haar_vector(rng, dim)
            if avoid is not None:
                v = v - avoid.matrix @ v
            for u in vs:
                v = v - u * np.vdot(u, v)
            norm = np.linalg.norm(v)
            if norm > 1e-6:
                vs.append(v / norm)
                break
        else:
            return None
    return projector_from_vectors(vs, tol)


def find_contrary_inferences(dim: int, trials: int, seed: int,
                             tol: float = DEFAULT_TOL, rho=None, max_rank: int = 1,
                             planted=None, include_marginal: bool = False
                             ) -> list[ContraryInferenceCertificate]:
    """Randomized search over projector quadruples for contrary inferences.

    Draws Haar-random spans (rank 1 by default), orthogonalizes f1 against
    e1, and keeps every quadruple passing :func:`check_contrary_quadruple`.
    ``planted`` quadruples are evaluated first (as the leading trials), so
    known geometries can be recovered deterministically. Results are
    ordered by trial index and reproducible from (dim, trials, seed).

    Near-misses (all conditions within ``MARGINAL_FACTOR * tol``) are
    flagged marginal and only returned when ``include_marginal`` is set.
    """
    if not (3 <= dim <= 8):
        raise ValueError(f"dim {dim} outside [3, 8]")
    if trials < 0:
        raise ValueError("trials must be >= 0")
    if max_rank < 1 or max_rank >= dim:
        raise ValueError(f"max_rank {max_rank} outside [1, {dim - 1}]")
    rho = _resolve_rho(rho, dim, tol)
    rng = np.random.default_rng(seed)
    found: list[ContraryInferenceCertificate] = []
    candidates: list[tuple[Projector, Projector, Projector, Projector] | None] = \
        list(planted or [])
    candidates.extend([None] * trials)
    for trial, quad in enumerate(candidates):
        if quad is None:
            ranks = [int(rng.integers(1, max_rank + 1)) for _ in range(4)]
            e0 = _random_projector(rng, dim, ranks[0], tol)
            e1 = _random_projector(rng, dim, ranks[1], tol)
            e2 = _random_projector(rng, dim, ranks[3], tol)
            f1 = None
            if e1 is not None and e1.rank + ranks[2] <= dim:
                f1 = _random_projector(rng, dim, ranks[2], tol, avoid=e1)
            if e0 is None or e1 is None or f1 is None or e2 is None:
                continue
        else:
            e0, e1, f1, e2 = quad
        try:
            cert = check_contrary_quadruple(e0, e1, f1, e2, rho, tol)
        except ConditionFailed as exc:
            cert = _marginal_certificate(e0, e1, f1, e2, rho, tol, exc)
            if cert is None or not include_marginal:
                continue
        except NotOrthogonal:
            continue
        object.__setattr__(cert, "trial", trial)
        found.append(cert)
    return found


def _marginal_certificate(e0, e1, f1, e2, rho, tol,
                          exc: ConditionFailed) -> ContraryInferenceCertificate | None:
    """Build a marginal certificate from a near-miss, if it qualifies."""
    values = exc.values
    loose = MARGINAL_FACTOR * tol
    if values.get("p_joint", 0.0) <= tol:
        return None
    if values.get("max_offdiag_re_c1", np.inf) > tol:
        return None
    if values.get("max_offdiag_re_c2", np.inf) > tol:
        return None
    if abs(values.get("cond_c1", np.inf) - 1.0) > loose:
        return None
    if abs(values.get("cond_c2", np.inf) - 1.0) > loose:
        return None
    try:
        loose_cert = check_contrary_quadruple(e0, e1, f1, e2, rho, loose)
    except CHError:
        return None
    object.__setattr__(loose_cert, "marginal", True)
    object.__setattr__(loose_cert, "tol", tol)
    return loose_cert


# ---------------------------------------------------------------------------
# history order and ordered consistency


def history_leq(h1: History, h2: History, tol: float = DEFAULT_TOL) -> bool:
    """Slot-wise subspace order after identity-padding onto a merged grid."""
    if h1.dim != h2.dim:
        raise DimensionMismatch("histories live on different dimensions")
    grid = common_grid(h1, h2)
    a, b = pad_history(h1, grid), pad_history(h2, grid)
    return all(leq(x, y, tol) for x, y in zip(a.events, b.events))


def enumerate_family_histories(family: Family, cap: int = HISTORY_ENUM_CAP) -> list[History]:
    """Every history of the family: slot-wise nonempty member subset sums."""
    total = 1
    for d in family.slots:
        total *= 2 ** len(d) - 1
    if total > cap:
        raise ExplosionGuard(f"{total} family histories exceed cap {cap}")
    per_slot: list[list[Projector]] = []
    for d in family.slots:
        sums = []
        idx = list(range(len(d)))
        for r in range(1, len(d) + 1):
            for combo in itertools.combinations(idx, r):
                m = sum(d.members[i].matrix for i in combo)
                label = "+".join(d.labels[i] for i in combo)
                sums.append(Projector(m, sum(d.members[i].rank for i in combo), label))
        per_slot.append(sums)
    out = []
    for events in itertools.product(*per_slot):
        name = "|".join(e.label or "?" for e in events)
        out.append(History(tuple(events), family.slot_labels, name))
    return out


def is_ordered_consistent(h: History, catalog, rho=None, tol: float = DEFAULT_TOL,
                          cap: int = HISTORY_ENUM_CAP) -> OrderedConsistencyVerdict:
    """Check weight monotonicity of ``h`` against every dominating catalog history.

    ``h`` must belong to at least one catalog family and every catalog
    family must be weakly decoherent. The verdict is relative to the
    given finite catalog.
    """
    catalog = list(catalog)
    if not catalog:
        raise CHError("ordered-consistency check needs a non-empty catalog")
    rho = _resolve_rho(rho, h.dim, tol)
    containing = 0
    for fam in catalog:
        rep = is_weakly_decoherent(fam, rho, tol)
        if not rep.is_weakly_decoherent:
            raise InconsistentFamily(
                f"catalog family {fam.name or '?'} is not weakly decoherent")
        if history_in_family(h, fam, tol) is not None:
            containing += 1
    if containing == 0:
        raise HistoryNotInAnyConsistentFamily(
            "history belongs to no consistent family in the catalog")
    grid = common_grid(h, *catalog)
    h_padded = pad_history(h, grid)
    w_h = history_weight(h_padded, rho, tol)
    for fam in catalog:
        candidates = enumerate_family_histories(fam, cap)
        padded = [pad_history(c, grid) for c in candidates]
        weights = batch_weights(padded, rho, tol)
        for h2, w2 in zip(padded, weights):
            if history_leq(h_padded, h2, tol) and w_h > float(w2) + tol:
                return OrderedConsistencyVerdict(
                    history=h, ordered_consistent=False,
                    violating_pair=(h2, fam), weight=w_h, violating_weight=float(w2))
    return OrderedConsistencyVerdict(history=h, ordered_consistent=True, weight=w_h)


# ---------------------------------------------------------------------------
# the three-box fixture


def three_box_fixture(tol: float = DEFAULT_TOL) -> Scenario:
    """Dimension-3 scenario realizing a contrary inference.

    Basis states A, B, C; the outer events project onto (A+B+C)/sqrt(3)
    and (A+B-C)/sqrt(3); the two middle events are the A and B basis
    projectors. Ships with both generated families, the family of the
    outer data alone, the (inconsistent) joint refinement, and the
    single-slot middle decomposition family.
    """
    dim = 3
    basis = np.eye(3)
    vecs = {
        "A": basis[0], "B": basis[1], "C": basis[2],
        "psi": np.array([1.0, 1.0, 1.0]),
        "phi": np.array([1.0, 1.0, -1.0]),
    }
    proj = {
        "E0": projector_from_vectors([vecs["psi"]], tol, "E0"),
        "E1": projector_from_vectors([vecs["A"]], tol, "E1"),
        "F1": projector_from_vectors([vecs["B"]], tol, "F1"),
        "E2": projector_from_vectors([vecs["phi"]], tol, "E2"),
        "G": projector_from_vectors([vecs["C"]], tol, "G"),
        "I": identity_projector(dim),
    }
    proj["E0c"] = complement(proj["E0"], "E0c")
    proj["E1c"] = complement(proj["E1"], "E1c")
    proj["F1c"] = complement(proj["F1"], "F1c")
    proj["E2c"] = complement(proj["E2"], "E2c")

    dec = {
        "DE0": validate_decomposition([proj["E0"], proj["E0c"]], tol),
        "DE1": validate_decomposition([proj["E1"], proj["E1c"]], tol),
        "DF1": validate_decomposition([proj["F1"], proj["F1c"]], tol),
        "DE2": validate_decomposition([proj["E2"], proj["E2c"]], tol),
        "DMID": validate_decomposition([proj["E1"], proj["F1"], proj["G"]], tol),
        "DTRIV": validate_decomposition([proj["I"]], tol),
    }
    labels = DEFAULT_SLOT_LABELS
    fams = {
        "C1": Family((dec["DE0"], dec["DE1"], dec["DE2"]), labels, "C1"),
        "C2": Family((dec["DE0"], dec["DF1"], dec["DE2"]), labels, "C2"),
        "Ch0": Family((dec["DE0"], dec["DTRIV"], dec["DE2"]), labels, "Ch0"),
        "JOINT": Family((dec["DE0"], dec["DMID"], dec["DE2"]), labels, "JOINT"),
        "JMID": Family((dec["DTRIV"], dec["DMID"], dec["DTRIV"]), labels, "JMID"),
        "TRIV": Family((dec["DTRIV"], dec["DTRIV"], dec["DTRIV"]), labels, "TRIV"),
    }
    hists = {
        "h0": History((proj["E0"], proj["E2"]), ("t1", "t3"), "h0"),
        "h1": History((proj["E0"], proj["E1"], proj["E2"]), labels, "h1"),
        "h2": History((proj["E0"], proj["F1"], proj["E2"]), labels, "h2"),
        "e1_mid": History((proj["E1"],), ("t2",), "e1_mid"),
        "f1_mid": History((proj["F1"],), ("t2",), "f1_mid"),
        "all_id": History((proj["I"], proj["I"], proj["I"]), labels, "all_id"),
    }
    return Scenario(
        dim=dim, tol=tol,
        projectors=proj, decompositions=dec, families=fams, histories=hists,
        rho=maximally_mixed(dim),
        params={"seed": 0, "trials": 0, "ensemble": 100000},
    )
