from __future__ import annotations

import itertools

import numpy as np
import pytest

import naive
from chkit.errors import (
    DimensionMismatch,
    DoesNotSumToIdentity,
    ExplosionGuard,
    HistoryNotInFamily,
    InconsistentFamily,
    NotConjoinable,
    NotOrthogonal,
    ZeroConditioningEvent,
)
from chkit.histories import (
    Family,
    History,
    chain_operator,
    coarse_history_cell,
    conditional_probability,
    decoherence_functional,
    enumerate_elementary,
    history_in_family,
    is_weakly_decoherent,
    pad_history,
    probability,
    validate_decomposition,
)
from chkit.linalg import complement, identity_projector, projector_from_vectors

from conftest import (
    TOL,
    classical_family,
    random_coarse_graining,
    random_consistent_family,
    two_slot_family,
)


def binary_family(p, labels=("t1",)):
    dec = validate_decomposition([p, complement(p)], TOL)
    return Family(tuple(dec for _ in labels), tuple(labels))


# ---------------------------------------------------------------------------
# decompositions


def test_identity_is_a_decomposition():
    d = validate_decomposition([identity_projector(3)], TOL)
    assert len(d) == 1


def test_binary_decomposition():
    p = projector_from_vectors([[1, 1, 0]], TOL)
    d = validate_decomposition([p, complement(p)], TOL)
    assert len(d) == 2


def test_duplicate_member_rejected():
    p = projector_from_vectors([[1, 0, 0]], TOL)
    with pytest.raises(NotOrthogonal):
        validate_decomposition([p, p], TOL)


def test_incomplete_decomposition_rejected():
    p = projector_from_vectors([[1, 0, 0]], TOL)
    q = projector_from_vectors([[0, 1, 0]], TOL)
    with pytest.raises(DoesNotSumToIdentity) as exc:
        validate_decomposition([p, q], TOL)
    assert exc.value.residual == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# enumeration and cells


def test_enumerate_single_slot(box):
    fam = binary_family(box.projectors["E0"])
    assert len(enumerate_elementary(fam)) == 2


def test_enumerate_three_binary_slots(box):
    assert len(enumerate_elementary(box.families["C1"])) == 8


def test_enumeration_cap():
    p = projector_from_vectors([[1, 0]], TOL)
    fam = binary_family(p, ("t1", "t2", "t3"))
    with pytest.raises(ExplosionGuard):
        enumerate_elementary(fam, cap=7)


def test_cell_of_elementary_is_singleton(box):
    fam = box.families["C1"]
    h = enumerate_elementary(fam)[3]
    cell = coarse_history_cell(h, fam, TOL)
    assert len(cell) == 1
    assert all(np.allclose(a.matrix, b.matrix)
               for a, b in zip(cell[0].events, h.events))


def test_cell_of_identity_history_is_everything(box):
    fam = box.families["C1"]
    cell = coarse_history_cell(box.histories["all_id"], fam, TOL)
    assert len(cell) == 8


def test_cell_with_one_free_slot(box):
    fam = box.families["C1"]
    cell = coarse_history_cell(box.histories["h0"], fam, TOL)
    assert len(cell) == 2
    mids = sorted(h.events[1].label for h in cell)
    assert mids == ["E1", "E1c"]


def test_history_not_in_family(box):
    with pytest.raises(HistoryNotInFamily):
        coarse_history_cell(box.histories["h2"], box.families["C1"], TOL)


def test_history_in_family_witness(box):
    w = history_in_family(box.histories["h0"], box.families["C1"], TOL)
    assert w is not None
    assert w[1] == (0, 1)  # middle identity = sum of both members


# ---------------------------------------------------------------------------
# chain operators


def test_chain_of_identity_history(box):
    c = chain_operator(box.histories["all_id"])
    assert np.allclose(c, np.eye(3))


def test_chain_of_single_event(box):
    e0 = box.projectors["E0"]
    c = chain_operator(History((e0,), ("t1",)))
    assert np.allclose(c, e0.matrix)


def test_chain_rank_one_product(box):
    # hand oracle: E2 E1 E0 = <phi|A><A|psi> |phi><psi| = (1/9) * M
    # with M = [[1,1,1],[1,1,1],[-1,-1,-1]]
    c = chain_operator(box.histories["h1"])
    expected = np.array([[1, 1, 1], [1, 1, 1], [-1, -1, -1]]) / 9.0
    assert np.allclose(c, expected, atol=1e-14)
    oracle = naive.chain([e.matrix for e in box.histories["h1"].events])
    assert naive.max_abs_entry(naive.mat_sub(naive.to_list(c), oracle)) <= 1e-14


# ---------------------------------------------------------------------------
# decoherence functional


def test_dfunc_identity_history(box):
    h = box.histories["all_id"]
    assert decoherence_functional(h, h, box.rho, TOL) == pytest.approx(1.0, abs=1e-14)


def test_dfunc_orthogonal_single_slot(box):
    e = box.projectors["E1"]
    h1 = History((e,), ("t1",))
    h2 = History((box.projectors["F1"],), ("t1",))
    assert abs(decoherence_functional(h1, h2, box.rho, TOL)) <= 1e-14


def test_dfunc_diagonal_equals_probability(box):
    fam = box.families["C1"]
    h = box.histories["h1"]
    d = decoherence_functional(h, h, box.rho, TOL)
    assert d.real == pytest.approx(probability(h, fam, box.rho, TOL), abs=1e-14)
    assert abs(d.imag) <= 1e-14


@pytest.mark.parametrize("seed", range(4))
def test_dfunc_conjugate_symmetry(seed):
    rng = np.random.default_rng(300 + seed)
    fam = random_consistent_family(rng, 4)
    elems = enumerate_elementary(fam)
    h1, h2 = elems[0], elems[-1]
    d12 = decoherence_functional(h1, h2)
    d21 = decoherence_functional(h2, h1)
    assert d12 == pytest.approx(d21.conjugate(), abs=TOL)


def test_single_slot_families_always_consistent():
    rng = np.random.default_rng(17)
    for _ in range(5):
        fam = two_slot_family(rng, 4)
        single = Family((fam.slots[0],), ("t1",))
        assert is_weakly_decoherent(single).is_weakly_decoherent


def test_fixture_families_consistent_against_oracle(box):
    for name in ("C1", "C2"):
        fam = box.families[name]
        rep = is_weakly_decoherent(fam, box.rho, TOL)
        assert rep.is_weakly_decoherent
        assert rep.max_off_diagonal_re <= 1e-12
        # oracle: all 28 unordered pairs evaluated independently
        elems = enumerate_elementary(fam)
        assert len(list(itertools.combinations(range(len(elems)), 2))) == 28
        for i, j in itertools.combinations(range(len(elems)), 2):
            d = naive.dfunc([e.matrix for e in elems[i].events],
                            [e.matrix for e in elems[j].events], box.rho)
            assert abs(d.real) <= 1e-12
            assert d == pytest.approx(complex(rep.table[i, j]), abs=1e-12)


def test_joint_family_not_consistent(box):
    rep = is_weakly_decoherent(box.families["JOINT"], box.rho, TOL)
    assert not rep.is_weakly_decoherent
    assert rep.max_off_diagonal_re > 1e-3
    # oracle agrees on the magnitude
    elems = enumerate_elementary(box.families["JOINT"])
    worst = max(
        abs(naive.dfunc([e.matrix for e in elems[i].events],
                        [e.matrix for e in elems[j].events], box.rho).real)
        for i, j in itertools.combinations(range(len(elems)), 2))
    assert worst == pytest.approx(rep.max_off_diagonal_re, abs=1e-12)


# ---------------------------------------------------------------------------
# probabilities


def test_identity_history_has_probability_one(box):
    assert probability(box.histories["all_id"], box.families["C1"], box.rho, TOL) \
        == pytest.approx(1.0, abs=1e-12)


def test_elementary_probabilities_sum_to_one(box):
    fam = box.families["C2"]
    total = sum(probability(h, fam, box.rho, TOL) for h in enumerate_elementary(fam))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_three_box_probabilities_match_oracle(box):
    # brute-force oracle value for p(h0) and p(h1)
    ident = np.eye(3)
    e = box.projectors
    p0_oracle = naive.weight([e["E0"].matrix, ident, e["E2"].matrix], box.rho)
    p1_oracle = naive.weight([e["E0"].matrix, e["E1"].matrix, e["E2"].matrix], box.rho)
    assert p0_oracle == pytest.approx(1 / 27, abs=1e-15)
    assert p1_oracle == pytest.approx(1 / 27, abs=1e-15)
    for fam_name in ("C1", "C2"):
        p0 = probability(box.histories["h0"], box.families[fam_name], box.rho, TOL)
        assert p0 == pytest.approx(p0_oracle, abs=1e-12)
    p1 = probability(box.histories["h1"], box.families["C1"], box.rho, TOL)
    assert p1 == pytest.approx(p1_oracle, abs=1e-12)


def test_probability_requires_consistency(box):
    with pytest.raises(InconsistentFamily):
        probability(box.histories["h1"], box.families["JOINT"], box.rho, TOL)


def test_conditional_target_equals_given(box):
    v = conditional_probability(box.histories["h0"], box.histories["h0"],
                                box.families["C1"], box.rho, TOL)
    assert v == pytest.approx(1.0, abs=1e-12)


def test_three_box_conditionals(box):
    c1 = conditional_probability(box.histories["e1_mid"], box.histories["h0"],
                                 box.families["C1"], box.rho, TOL)
    c2 = conditional_probability(box.histories["f1_mid"], box.histories["h0"],
                                 box.families["C2"], box.rho, TOL)
    assert c1 == pytest.approx(1.0, abs=1e-12)
    assert c2 == pytest.approx(1.0, abs=1e-12)


def test_dfunc_dimension_mismatch(box):
    h2 = History((identity_projector(2),), ("t1",))
    with pytest.raises(DimensionMismatch):
        decoherence_functional(box.histories["all_id"], h2)


def test_probability_history_not_in_family(box):
    with pytest.raises(HistoryNotInFamily):
        probability(box.histories["h2"], box.families["C1"], box.rho, TOL)


def test_non_commuting_targets_not_conjoinable(box):
    e = box.projectors
    target = History((e["E1"],), ("t1",))  # E1 at the slot where h0 has E0
    with pytest.raises(NotConjoinable):
        conditional_probability(target, box.histories["h0"],
                                box.families["C1"], box.rho, TOL)


def test_conditional_on_zero_event(box):
    e = box.projectors
    # (E0, F1, E2) has zero probability inside C2-conditioning? No: use a
    # genuinely zero conditioner: E1 then F1 (orthogonal at different slots)
    h_zero = History((e["E1"], e["F1"]), ("t1", "t2"))
    fam = Family((box.decompositions["DE1"], box.decompositions["DF1"]), ("t1", "t2"))
    with pytest.raises(ZeroConditioningEvent):
        conditional_probability(box.histories["all_id"], h_zero, fam, box.rho, TOL)


# ---------------------------------------------------------------------------
# properties


@pytest.mark.parametrize("seed", range(8))
def test_additivity_on_random_consistent_families(seed):
    rng = np.random.default_rng(400 + seed)
    dim = int(rng.integers(3, 7))
    fam = random_consistent_family(rng, dim)
    coarse = random_coarse_graining(rng, fam)
    rep = is_weakly_decoherent(coarse)
    assert rep.is_weakly_decoherent
    for h in enumerate_elementary(coarse):
        p = probability(h, coarse)
        cell = coarse_history_cell(h, fam)
        total = sum(probability(g, fam) for g in cell)
        assert abs(p - total) <= 10 * TOL


@pytest.mark.parametrize("seed", range(8))
def test_coarse_graining_preserves_weak_decoherence(seed):
    rng = np.random.default_rng(500 + seed)
    fam = random_consistent_family(rng, int(rng.integers(3, 7)))
    assert is_weakly_decoherent(fam).is_weakly_decoherent
    coarse = random_coarse_graining(rng, fam)
    assert is_weakly_decoherent(coarse).is_weakly_decoherent


def test_probability_invariant_under_identity_slots(box):
    fam = box.families["C1"]
    h = box.histories["h1"]
    padded = History(
        (h.events[0], h.events[1], identity_projector(3), h.events[2]),
        ("t1", "t2", "t2b", "t3"))
    assert np.allclose(chain_operator(padded), chain_operator(h))
    wide = Family(
        (fam.slots[0], fam.slots[1], validate_decomposition([identity_projector(3)], TOL),
         fam.slots[2]),
        ("t1", "t2", "t2b", "t3"))
    assert probability(padded, wide, box.rho, TOL) == \
        pytest.approx(probability(h, fam, box.rho, TOL), abs=1e-14)


def test_pad_history_inserts_identity(box):
    h = pad_history(box.histories["h0"], ("t1", "t2", "t3"))
    assert np.allclose(h.events[1].matrix, np.eye(3))
