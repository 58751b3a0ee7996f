"""Dense complex projector arithmetic at small fixed dimension.

All values are immutable after construction (arrays are write-locked) and
every operation is a pure function, so everything here is safe to share
between concurrent tasks. Structural predicates (orthogonality, ordering,
commutation) compare max-abs entry residuals against a tolerance; the
default tolerance is a scenario-level setting, not a per-call constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DependentVectors, DimensionMismatch, NotAProjector

DEFAULT_TOL = 1e-10
MAX_DIM = 64


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent matrix with its (trace-derived) rank.

    Instances compare by identity; use :func:`projector_equal` for
    numerical equality.
    """

    matrix: np.ndarray
    rank: int
    label: str | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def relabel(self, label: str) -> "Projector":
        return Projector(self.matrix, self.rank, label)


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _check_square(m: np.ndarray) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def _check_same_dim(p: Projector, q: Projector) -> None:
    if p.dim != q.dim:
        raise DimensionMismatch(f"projector dimensions differ: {p.dim} vs {q.dim}")


def projector_from_matrix(matrix, tol: float = DEFAULT_TOL, label: str | None = None) -> Projector:
    """Validate a matrix as a projector and derive its rank from the trace."""
    m = np.asarray(matrix, dtype=np.complex128)
    n = _check_square(m)
    if not np.all(np.isfinite(m.view(np.float64))):
        raise NotAProjector("matrix contains non-finite entries")
    herm = max_abs(m - m.conj().T)
    if herm > tol:
        raise NotAProjector(f"not Hermitian: residual {herm:.3e} > {tol:.1e}")
    idem = max_abs(m @ m - m)
    if idem > tol:
        raise NotAProjector(f"not idempotent: residual {idem:.3e} > {tol:.1e}")
    tr = complex(np.trace(m))
    if abs(tr.imag) > tol:
        raise NotAProjector(f"trace has imaginary part {tr.imag:.3e}")
    rank = int(round(tr.real))
    if rank < 0 or rank > n:
        raise NotAProjector(f"trace {tr.real:.6f} outside [0, {n}]")
    m = (m + m.conj().T) / 2.0
    return Projector(_freeze(m), rank, label)


def projector_from_vectors(vectors, tol: float = DEFAULT_TOL, label: str | None = None) -> Projector:
    """Orthogonal projector onto the span of the given complex vectors.

    Uses modified Gram-Schmidt with one re-orthogonalization pass; raises
    :class:`DependentVectors` when a vector collapses into the span of the
    previous ones.
    """
    vs = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in vectors]
    if not vs:
        raise DependentVectors("need at least one spanning vector")
    n = vs[0].shape[0]
    for v in vs:
        if v.shape[0] != n:
            raise DimensionMismatch(f"vector lengths differ: {v.shape[0]} vs {n}")
    basis: list[np.ndarray] = []
    for v in vs:
        scale = np.linalg.norm(v)
        if scale == 0.0:
            raise DependentVectors("zero vector in spanning set")
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w = w - b * np.vdot(b, w)
        norm = np.linalg.norm(w)
        if norm <= tol * scale:
            raise DependentVectors(
                f"vector {len(basis)} is dependent within tol (residual norm {norm:.3e})"
            )
        basis.append(w / norm)
    p = np.zeros((n, n), dtype=np.complex128)
    for b in basis:
        p += np.outer(b, b.conj())
    p = (p + p.conj().T) / 2.0
    return Projector(_freeze(p), len(basis), label)


def identity_projector(dim: int, label: str | None = "I") -> Projector:
    return Projector(_freeze(np.eye(dim, dtype=np.complex128)), dim, label)


def zero_projector(dim: int, label: str | None = "0") -> Projector:
    return Projector(_freeze(np.zeros((dim, dim), dtype=np.complex128)), 0, label)


def complement(p: Projector, label: str | None = None) -> Projector:
    """The projector 1 - P onto the orthogonal complement."""
    m = np.eye(p.dim, dtype=np.complex128) - p.matrix
    if label is None and p.label is not None:
        label = f"~{p.label}"
    return Projector(_freeze(m), p.dim - p.rank, label)


def orthogonal(p: Projector, q: Projector, tol: float = DEFAULT_TOL) -> bool:
    """True iff PQ vanishes within tol."""
    _check_same_dim(p, q)
    return max_abs(p.matrix @ q.matrix) <= tol


def leq(p: Projector, q: Projector, tol: float = DEFAULT_TOL) -> bool:
    """Subspace order: true iff QP = P within tol (range of P inside range of Q)."""
    _check_same_dim(p, q)
    return max_abs(q.matrix @ p.matrix - p.matrix) <= tol


def commutes(p: Projector, q: Projector, tol: float = DEFAULT_TOL) -> bool:
    """True iff PQ - QP vanishes within tol."""
    _check_same_dim(p, q)
    return max_abs(p.matrix @ q.matrix - q.matrix @ p.matrix) <= tol


def projector_product(p: Projector, q: Projector, tol: float = DEFAULT_TOL,
                      label: str | None = None) -> Projector:
    """Product of two commuting projectors, validated as a projector."""
    _check_same_dim(p, q)
    return projector_from_matrix(p.matrix @ q.matrix, tol=tol, label=label)


def projector_equal(p: Projector, q: Projector, tol: float = DEFAULT_TOL) -> bool:
    _check_same_dim(p, q)
    return max_abs(p.matrix - q.matrix) <= tol


def is_zero(p: Projector, tol: float = DEFAULT_TOL) -> bool:
    return max_abs(p.matrix) <= tol


def entry_sort_key(matrix: np.ndarray, decimals: int = 8) -> tuple:
    """Deterministic ordering key: lexicographic over rounded entries."""
    r = np.round(matrix.real, decimals).ravel()
    i = np.round(matrix.imag, decimals).ravel()
    # -0.0 would break lexicographic ties between equal matrices
    r = r + 0.0
    i = i + 0.0
    return tuple(np.stack([r, i], axis=1).ravel())


def validate_density_matrix(rho, dim: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Check Hermitian / positive semidefinite / unit trace within tol."""
    m = np.asarray(rho, dtype=np.complex128)
    if _check_square(m) != dim:
        raise DimensionMismatch(f"density matrix is {m.shape[0]}-dimensional, expected {dim}")
    if max_abs(m - m.conj().T) > tol:
        raise ValueError("density matrix is not Hermitian within tol")
    if abs(complex(np.trace(m)).real - 1.0) > tol or abs(complex(np.trace(m)).imag) > tol:
        raise ValueError("density matrix trace is not 1 within tol")
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    if evals.min() < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")
    return _freeze(m.copy())


def maximally_mixed(dim: int) -> np.ndarray:
    return _freeze(np.eye(dim, dtype=np.complex128) / dim)
