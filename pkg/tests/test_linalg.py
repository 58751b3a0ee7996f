from __future__ import annotations

import numpy as np
import pytest

from chkit.errors import DependentVectors, DimensionMismatch, NotAProjector
from chkit.linalg import (
    commutes,
    complement,
    identity_projector,
    leq,
    orthogonal,
    projector_from_matrix,
    projector_from_vectors,
    zero_projector,
)

from conftest import TOL, random_unitary


def test_coordinate_projector():
    p = projector_from_vectors([[1, 0]], TOL)
    assert np.allclose(p.matrix, np.diag([1.0, 0.0]))
    assert p.rank == 1


def test_full_basis_gives_identity():
    p = projector_from_vectors(np.eye(4), TOL)
    assert np.allclose(p.matrix, np.eye(4))
    assert p.rank == 4


def test_uniform_vector_projector():
    # outer product of (1,1,1)/sqrt(3) with itself: every entry 1/3
    p = projector_from_vectors([[1, 1, 1]], TOL)
    assert np.allclose(p.matrix, np.full((3, 3), 1 / 3), atol=1e-14)
    assert p.rank == 1


def test_unnormalized_and_complex_spans():
    p = projector_from_vectors([[2j, 0, 0], [0, 3, 0]], TOL)
    assert np.allclose(p.matrix, np.diag([1.0, 1.0, 0.0]))
    assert p.rank == 2


def test_dependent_vectors_rejected():
    with pytest.raises(DependentVectors):
        projector_from_vectors([[1, 0], [1, 1e-14]], TOL)
    with pytest.raises(DependentVectors):
        projector_from_vectors([[0, 0, 0]], TOL)


def test_mixed_dimensions_rejected():
    with pytest.raises(DimensionMismatch):
        projector_from_vectors([[1, 0], [1, 0, 0]], TOL)


def test_projector_from_matrix_validates():
    with pytest.raises(NotAProjector):
        projector_from_matrix([[0.5, 0.0], [0.0, 0.0]], TOL)
    with pytest.raises(NotAProjector):
        projector_from_matrix([[1.0, 1e-6], [0.0, 0.0]], TOL)


def test_complement_of_extremes():
    ident = identity_projector(3)
    zero = zero_projector(3)
    assert np.allclose(complement(ident).matrix, zero.matrix)
    assert np.allclose(complement(zero).matrix, ident.matrix)
    d = projector_from_matrix(np.diag([1.0, 0, 0]), TOL)
    assert np.allclose(complement(d).matrix, np.diag([0.0, 1, 1]))
    assert complement(d).rank == 2


def test_orthogonal_basic():
    a = projector_from_matrix(np.diag([1.0, 0]), TOL)
    b = projector_from_matrix(np.diag([0.0, 1]), TOL)
    assert orthogonal(a, b, TOL)
    assert not orthogonal(a, a, TOL)


def test_orthonormal_rank_one_projectors_are_orthogonal():
    rng = np.random.default_rng(5)
    u = random_unitary(rng, 4)
    pa = projector_from_vectors([u[:, 0]], TOL)
    pb = projector_from_vectors([u[:, 1]], TOL)
    assert orthogonal(pa, pb, TOL)


def test_leq_order():
    zero = zero_projector(3)
    ident = identity_projector(3)
    p = projector_from_matrix(np.diag([1.0, 0, 0]), TOL)
    q = projector_from_matrix(np.diag([1.0, 1, 0]), TOL)
    r = projector_from_matrix(np.diag([0.0, 1, 1]), TOL)
    assert leq(zero, p, TOL) and leq(p, ident, TOL)
    assert leq(p, q, TOL)
    assert not leq(p, r, TOL)


def test_commutes_cases():
    ident = identity_projector(2)
    p = projector_from_vectors([[1, 0]], TOL)
    q = projector_from_vectors([[1, 1]], TOL)
    d1 = projector_from_matrix(np.diag([1.0, 0]), TOL)
    d2 = projector_from_matrix(np.diag([0.0, 1]), TOL)
    assert commutes(p, ident, TOL)
    assert commutes(d1, d2, TOL)
    # hand computation: PQ - QP = [[0, 1/2], [-1/2, 0]]
    comm = p.matrix @ q.matrix - q.matrix @ p.matrix
    assert np.allclose(comm, [[0, 0.5], [-0.5, 0]], atol=1e-14)
    assert not commutes(p, q, TOL)


def test_dimension_mismatch_in_predicates():
    p2 = identity_projector(2)
    p3 = identity_projector(3)
    for fn in (orthogonal, leq, commutes):
        with pytest.raises(DimensionMismatch):
            fn(p2, p3, TOL)


@pytest.mark.parametrize("seed", range(5))
def test_random_projector_invariants(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    r = int(rng.integers(1, n))
    u = random_unitary(rng, n)
    p = projector_from_vectors(u[:, :r].T, TOL)
    m = p.matrix
    assert np.max(np.abs(m - m.conj().T)) <= TOL
    assert np.max(np.abs(m @ m - m)) <= TOL
    assert p.rank == r
    # double complement returns the original within working precision
    assert np.max(np.abs(complement(complement(p)).matrix - m)) <= TOL


@pytest.mark.parametrize("seed", range(5))
def test_orthogonal_implies_leq_complement(seed):
    rng = np.random.default_rng(100 + seed)
    n = 5
    u = random_unitary(rng, n)
    p = projector_from_vectors([u[:, 0], u[:, 1]], TOL)
    q = projector_from_vectors([u[:, 2]], TOL)
    assert orthogonal(p, q, TOL)
    assert leq(p, complement(q), TOL)


@pytest.mark.parametrize("seed", range(5))
def test_trace_cyclic_invariance(seed):
    rng = np.random.default_rng(200 + seed)
    n = int(rng.integers(2, 9))
    a, b, c = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(3))
    t1 = np.trace(a @ b @ c)
    t2 = np.trace(b @ c @ a)
    t3 = np.trace(c @ a @ b)
    assert abs(t1 - t2) <= 1e-10 * max(1.0, abs(t1))
    assert abs(t1 - t3) <= 1e-10 * max(1.0, abs(t1))
