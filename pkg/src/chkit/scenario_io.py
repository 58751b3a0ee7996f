"""Scenario documents: JSON files naming vectors, projectors, families, histories.

Complex numbers are two-element ``[re, im]`` arrays; matrices are
row-major arrays of such pairs. Sections are resolved in a fixed order
(vectors, projectors, decompositions, families, histories), so a name
can only refer to things defined before it; forward references fail with
an unknown-name error. The name ``I`` is reserved for the identity
projector.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import CHError, ScenarioError
from .histories import (
    Decomposition,
    Family,
    History,
    Scenario,
    validate_decomposition,
)
from .linalg import (
    DEFAULT_TOL,
    Projector,
    identity_projector,
    maximally_mixed,
    projector_from_matrix,
    projector_from_vectors,
    validate_density_matrix,
)

_TOP_KEYS = {
    "dim", "tol", "allow_zero_members", "labels", "vectors", "projectors",
    "decompositions", "families", "histories", "rho", "params", "meta",
}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def _parse_complex(entry, where: str) -> complex:
    _require(isinstance(entry, (list, tuple)) and len(entry) == 2
             and all(isinstance(x, (int, float)) for x in entry),
             f"{where}: complex entries must be [re, im] number pairs")
    return complex(entry[0], entry[1])


def _parse_vector(entry, dim: int, where: str) -> np.ndarray:
    _require(isinstance(entry, list) and len(entry) == dim,
             f"{where}: expected a vector of {dim} [re, im] pairs")
    return np.array([_parse_complex(e, where) for e in entry], dtype=np.complex128)


def _parse_matrix(entry, dim: int, where: str) -> np.ndarray:
    _require(isinstance(entry, list) and len(entry) == dim,
             f"{where}: expected a {dim}x{dim} matrix")
    rows = []
    for r, row in enumerate(entry):
        _require(isinstance(row, list) and len(row) == dim,
                 f"{where}: row {r} must hold {dim} [re, im] pairs")
        rows.append([_parse_complex(e, f"{where} row {r}") for e in row])
    return np.array(rows, dtype=np.complex128)


def encode_matrix(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m)]


def parse_scenario(doc: dict, tol_override: float | None = None) -> Scenario:
    """Build a validated scenario from a decoded JSON document."""
    _require(isinstance(doc, dict), "scenario document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    _require("dim" in doc, "scenario needs a 'dim'")
    dim = doc["dim"]
    _require(isinstance(dim, int) and dim >= 1, "'dim' must be a positive integer")
    tol = tol_override if tol_override is not None else float(doc.get("tol", DEFAULT_TOL))
    _require(tol > 0, "'tol' must be positive")
    allow_zero = bool(doc.get("allow_zero_members", False))

    labels = doc.get("labels")
    if labels is not None:
        _require(isinstance(labels, list) and all(isinstance(x, str) for x in labels)
                 and len(set(labels)) == len(labels),
                 "'labels' must be a list of distinct strings")

    vectors: dict[str, np.ndarray] = {}
    for name, entry in dict(doc.get("vectors", {})).items():
        vectors[name] = _parse_vector(entry, dim, f"vector '{name}'")

    projectors: dict[str, Projector] = {"I": identity_projector(dim)}
    for name, entry in dict(doc.get("projectors", {})).items():
        _require(name != "I", "projector name 'I' is reserved for the identity")
        _require(name not in projectors, f"duplicate projector '{name}'")
        _require(isinstance(entry, dict) and ("span" in entry) != ("matrix" in entry),
                 f"projector '{name}' needs exactly one of 'span' or 'matrix'")
        try:
            if "span" in entry:
                names = entry["span"]
                _require(isinstance(names, list) and names,
                         f"projector '{name}': 'span' must be a non-empty list of vector names")
                missing = [v for v in names if v not in vectors]
                _require(not missing,
                         f"projector '{name}': unknown vectors {missing} "
                         "(forward references are rejected)")
                projectors[name] = projector_from_vectors(
                    [vectors[v] for v in names], tol, name)
            else:
                m = _parse_matrix(entry["matrix"], dim, f"projector '{name}'")
                projectors[name] = projector_from_matrix(m, tol, name)
        except CHError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"projector '{name}': {exc}") from exc

    decompositions: dict[str, Decomposition] = {}
    for name, entry in dict(doc.get("decompositions", {})).items():
        _require(isinstance(entry, list) and entry,
                 f"decomposition '{name}' must be a non-empty list of projector names")
        missing = [p for p in entry if p not in projectors]
        _require(not missing,
                 f"decomposition '{name}': unknown projectors {missing} "
                 "(forward references are rejected)")
        try:
            decompositions[name] = validate_decomposition(
                [projectors[p] for p in entry], tol, allow_zero)
        except CHError as exc:
            raise ScenarioError(f"decomposition '{name}': {exc}") from exc

    families: dict[str, Family] = {}
    for name, entry in dict(doc.get("families", {})).items():
        _require(isinstance(entry, dict) and "slots" in entry,
                 f"family '{name}' needs a 'slots' list")
        slot_names = entry["slots"]
        missing = [d for d in slot_names if d not in decompositions]
        _require(not missing,
                 f"family '{name}': unknown decompositions {missing} "
                 "(forward references are rejected)")
        fam_labels = entry.get("labels")
        if fam_labels is None:
            _require(labels is not None and len(labels) >= len(slot_names),
                     f"family '{name}': no 'labels' and no scenario-level label grid")
            fam_labels = labels[:len(slot_names)]
        _require(len(fam_labels) == len(slot_names),
                 f"family '{name}': {len(slot_names)} slots but {len(fam_labels)} labels")
        try:
            families[name] = Family(
                tuple(decompositions[d] for d in slot_names), tuple(fam_labels), name)
        except CHError as exc:
            raise ScenarioError(f"family '{name}': {exc}") from exc

    histories: dict[str, History] = {}
    for name, entry in dict(doc.get("histories", {})).items():
        _require(isinstance(entry, dict) and isinstance(entry.get("events"), dict)
                 and entry["events"],
                 f"history '{name}' needs an 'events' mapping of slot label to projector")
        events = entry["events"]
        missing = [p for p in events.values() if p not in projectors]
        _require(not missing,
                 f"history '{name}': unknown projectors {missing} "
                 "(forward references are rejected)")
        slot_order = list(events)
        if labels is not None:
            _require(all(lab in labels for lab in slot_order),
                     f"history '{name}': slot labels outside the scenario grid {labels}")
            slot_order.sort(key=labels.index)
        try:
            histories[name] = History(
                tuple(projectors[events[lab]] for lab in slot_order),
                tuple(slot_order), name)
        except CHError as exc:
            raise ScenarioError(f"history '{name}': {exc}") from exc

    if "rho" in doc:
        try:
            rho = validate_density_matrix(
                _parse_matrix(doc["rho"], dim, "rho"), dim, tol)
        except (CHError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"rho: {exc}") from exc
    else:
        rho = maximally_mixed(dim)

    params = dict(doc.get("params", {}))
    try:
        return Scenario(dim=dim, tol=tol, projectors=projectors,
                        decompositions=decompositions, families=families,
                        histories=histories, rho=rho, params=params,
                        allow_zero_members=allow_zero)
    except CHError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path, tol_override: float | None = None) -> Scenario:
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return parse_scenario(doc, tol_override)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def certificate_to_scenario(cert) -> dict:
    """Encode a certificate as a replayable scenario fragment.

    The fragment defines the four projectors at full precision plus a
    ``params.plant`` entry, so replaying it with the find-contrary command
    and zero extra trials re-verifies the certificate.
    """
    doc = {
        "dim": cert.dim,
        "tol": cert.tol,
        "labels": list(cert.family_c1.slot_labels),
        "projectors": {
            "e0": {"matrix": encode_matrix(cert.e0.matrix)},
            "e1": {"matrix": encode_matrix(cert.e1.matrix)},
            "f1": {"matrix": encode_matrix(cert.f1.matrix)},
            "e2": {"matrix": encode_matrix(cert.e2.matrix)},
        },
        "params": {"plant": ["e0", "e1", "f1", "e2"], "trials": 0,
                   "dim": cert.dim},
        "meta": {
            "p_joint": cert.p_joint,
            "cond_c1": cert.cond_c1,
            "cond_c2": cert.cond_c2,
            "marginal": cert.marginal,
            "trial": cert.trial,
        },
    }
    if not np.allclose(cert.rho, maximally_mixed(cert.dim)):
        doc["rho"] = encode_matrix(cert.rho)
    return doc
