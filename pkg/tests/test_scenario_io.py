from __future__ import annotations

import json

import numpy as np
import pytest

from chkit.errors import ScenarioError
from chkit.fixtures import three_box_path
from chkit.histories import decomposition_equal, family_equal
from chkit.inference import check_contrary_quadruple, three_box_fixture
from chkit.linalg import projector_equal
from chkit.scenario_io import (
    certificate_to_scenario,
    encode_matrix,
    file_digest,
    load_scenario,
    parse_scenario,
)

from conftest import TOL


def minimal_doc(**extra):
    doc = {
        "dim": 2,
        "vectors": {"up": [[1, 0], [0, 0]]},
        "projectors": {"P": {"span": ["up"]}},
    }
    doc.update(extra)
    return doc


def test_bundled_fixture_matches_programmatic():
    scn = load_scenario(three_box_path())
    ref = three_box_fixture()
    assert scn.dim == ref.dim == 3
    for name in ("E0", "E1", "F1", "E2", "G"):
        assert projector_equal(scn.projectors[name], ref.projectors[name], TOL)
    for name in ("DE0", "DE1", "DF1", "DE2", "DMID", "DTRIV"):
        assert decomposition_equal(scn.decompositions[name],
                                   ref.decompositions[name], TOL)
    for name in ("C1", "C2", "Ch0", "JOINT", "JMID", "TRIV"):
        assert family_equal(scn.families[name], ref.families[name], TOL)
    assert set(scn.histories) == set(ref.histories)
    assert scn.histories["h0"].slot_labels == ("t1", "t3")
    assert np.allclose(scn.rho, np.eye(3) / 3)


def test_identity_is_predefined():
    scn = parse_scenario(minimal_doc(decompositions={"D": ["I"]}))
    assert scn.projectors["I"].rank == 2
    assert "D" in scn.decompositions


def test_identity_name_reserved():
    doc = minimal_doc()
    doc["projectors"]["I"] = {"span": ["up"]}
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_unknown_vector_rejected():
    doc = minimal_doc()
    doc["projectors"]["Q"] = {"span": ["nope"]}
    with pytest.raises(ScenarioError, match="forward references"):
        parse_scenario(doc)


def test_forward_reference_rejected():
    # histories come after projectors; referencing a history from a
    # decomposition slot is impossible, and unknown projector names fail
    doc = minimal_doc(decompositions={"D": ["LATER"]})
    with pytest.raises(ScenarioError, match="forward references"):
        parse_scenario(doc)


def test_unknown_top_level_key_rejected():
    with pytest.raises(ScenarioError, match="unknown top-level"):
        parse_scenario(minimal_doc(surprise=1))


def test_meta_section_ignored():
    scn = parse_scenario(minimal_doc(meta={"anything": [1, 2, 3]}))
    assert "P" in scn.projectors


def test_dimension_ceiling():
    doc = {"dim": 65}
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_bad_complex_entry():
    doc = minimal_doc()
    doc["vectors"]["bad"] = [[1, 0], [0]]
    with pytest.raises(ScenarioError, match="re, im"):
        parse_scenario(doc)


def test_bad_rho_rejected():
    doc = minimal_doc(rho=[[[1, 0], [0, 0]], [[0, 0], [1, 0]]])
    with pytest.raises(ScenarioError, match="rho"):
        parse_scenario(doc)  # trace 2


def test_explicit_matrix_projector():
    doc = minimal_doc()
    doc["projectors"]["M"] = {"matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}
    scn = parse_scenario(doc)
    assert scn.projectors["M"].rank == 1


def test_non_projector_matrix_rejected():
    doc = minimal_doc()
    doc["projectors"]["M"] = {"matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0, 0]]]}
    with pytest.raises(ScenarioError, match="idempotent"):
        parse_scenario(doc)


def test_zero_member_flag():
    doc = minimal_doc()
    doc["projectors"]["Z"] = {"matrix": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}
    doc["decompositions"] = {"D": ["I", "Z"]}
    with pytest.raises(ScenarioError, match="zero projector"):
        parse_scenario(doc)
    doc["allow_zero_members"] = True
    scn = parse_scenario(doc)
    assert len(scn.decompositions["D"]) == 2


def test_history_slot_order_follows_grid():
    doc = minimal_doc(labels=["t1", "t2"])
    doc["histories"] = {"h": {"events": {"t2": "P", "t1": "I"}}}
    scn = parse_scenario(doc)
    assert scn.histories["h"].slot_labels == ("t1", "t2")


def test_tol_override():
    scn = load_scenario(three_box_path(), tol_override=1e-8)
    assert scn.tol == 1e-8


def test_file_digest_stable():
    assert file_digest(three_box_path()) == file_digest(three_box_path())
    assert len(file_digest(three_box_path())) == 64


def test_certificate_fragment_round_trips(box):
    e = box.projectors
    cert = check_contrary_quadruple(e["E0"], e["E1"], e["F1"], e["E2"], box.rho, TOL)
    frag = certificate_to_scenario(cert)
    # the fragment is valid JSON and a valid scenario
    scn = parse_scenario(json.loads(json.dumps(frag)))
    again = check_contrary_quadruple(
        scn.projectors["e0"], scn.projectors["e1"],
        scn.projectors["f1"], scn.projectors["e2"], scn.rho, scn.tol)
    assert again.p_joint == pytest.approx(cert.p_joint, abs=1e-12)
    assert frag["meta"]["cond_c1"] == pytest.approx(1.0, abs=1e-12)


def test_encode_matrix_round_trip():
    m = np.array([[0.5 + 0.25j, 0.1], [-0.3j, 1.0]])
    enc = encode_matrix(m)
    dec = np.array([[complex(a, b) for a, b in row] for row in enc])
    assert np.array_equal(m, dec)
