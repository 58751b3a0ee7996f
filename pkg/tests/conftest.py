from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chkit.histories import Decomposition, Family, validate_decomposition
from chkit.inference import three_box_fixture
from chkit.linalg import projector_from_matrix

TOL = 1e-10


@pytest.fixture(scope="session")
def box():
    return three_box_fixture()


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_index_partition(rng: np.random.Generator, n: int,
                           max_parts: int) -> list[list[int]]:
    """Random partition of range(n) into 2..max_parts non-empty blocks."""
    k = int(rng.integers(2, min(max_parts, n) + 1))
    while True:
        assignment = rng.integers(0, k, size=n)
        blocks = [list(np.nonzero(assignment == b)[0]) for b in range(k)]
        blocks = [b for b in blocks if b]
        if len(blocks) >= 2:
            return blocks


def basis_decomposition(u: np.ndarray, blocks: list[list[int]],
                        tol: float = TOL) -> Decomposition:
    """Projectors onto spans of unitary columns grouped by blocks."""
    members = []
    for i, block in enumerate(blocks):
        cols = u[:, block]
        members.append(projector_from_matrix(cols @ cols.conj().T, tol, f"b{i}"))
    return validate_decomposition(members, tol)


def classical_family(rng: np.random.Generator, dim: int, n_slots: int,
                     name: str | None = None, max_parts: int | None = None) -> Family:
    """Slots simultaneously diagonal in one random basis: consistent for any rho."""
    u = random_unitary(rng, dim)
    slots = tuple(
        basis_decomposition(u, random_index_partition(rng, dim, max_parts or dim))
        for _ in range(n_slots))
    labels = tuple(f"t{k + 1}" for k in range(n_slots))
    return Family(slots, labels, name)


def two_slot_family(rng: np.random.Generator, dim: int,
                    name: str | None = None, max_parts: int | None = None) -> Family:
    """Independent random decompositions; weakly decoherent at rho = I/N."""
    slots = tuple(
        basis_decomposition(random_unitary(rng, dim),
                            random_index_partition(rng, dim, max_parts or dim))
        for _ in range(2))
    return Family(slots, ("t1", "t2"), name)


def random_consistent_family(rng: np.random.Generator, dim: int,
                             name: str | None = None) -> Family:
    if rng.random() < 0.5:
        return classical_family(rng, dim, int(rng.integers(1, 4)), name)
    return two_slot_family(rng, dim, name)


def merge_decomposition(rng: np.random.Generator, dec: Decomposition,
                        max_groups: int, tol: float = TOL) -> Decomposition:
    """Random coarse-graining of one decomposition."""
    k = int(rng.integers(1, min(max_groups, len(dec)) + 1))
    assignment = rng.integers(0, k, size=len(dec))
    members = []
    for g in range(k):
        idx = np.nonzero(assignment == g)[0]
        if idx.size == 0:
            continue
        total = sum(dec.members[i].matrix for i in idx)
        members.append(projector_from_matrix(total, tol, f"g{g}"))
    return validate_decomposition(members, tol)


def random_coarse_graining(rng: np.random.Generator, fam: Family,
                           max_groups: int = 3, tol: float = TOL) -> Family:
    slots = tuple(merge_decomposition(rng, d, max_groups, tol) for d in fam.slots)
    return Family(slots, fam.slot_labels, None)
