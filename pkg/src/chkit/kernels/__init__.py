"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
used otherwise. Override with the CHKIT_KERNELS environment variable:
"auto" (default), "compiled" (fail hard if missing), or "python".

Dispatch is size-aware: hand-rolled compiled loops beat numpy's dispatch
overhead on the small batches the search paths generate, while the BLAS
path behind the numpy fallback wins on large pair tables, so big calls
are routed there even when the extension is loaded (see
benchmarks/bench_kernels.py for the crossover).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure

_requested = os.environ.get("CHKIT_KERNELS", "auto").lower()

if _requested in ("auto", "compiled"):
    try:
        from . import _compiled
    except ImportError:
        if _requested == "compiled":
            raise
        _compiled = None  # type: ignore[assignment]
else:
    _compiled = None  # type: ignore[assignment]

_active = _compiled if _compiled is not None else _pure

BACKEND: str = _active.BACKEND


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name."""
    out: dict[str, object] = {"python": _pure}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def _as_c128(a, ndim: int) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(a, dtype=np.complex128))
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    return arr


# measured crossovers (benchmarks/bench_kernels.py): beyond these sizes the
# BLAS-backed fallback is faster than the hand-rolled loops
_CHAIN_LOOP_LIMIT = 256      # H * N
_TABLE_LOOP_LIMIT = 32       # H


def chain_products(events) -> np.ndarray:
    """Batched time-ordered products: out[h] = E_{S-1} @ ... @ E_0.

    ``events`` has shape (H, S, N, N); slot 0 is the earliest time and ends
    up rightmost in the product.
    """
    ev = _as_c128(events, 4)
    mod = _active if ev.shape[0] * ev.shape[2] <= _CHAIN_LOOP_LIMIT else _pure
    return mod.chain_products(ev)


def decoherence_table(chains, rho) -> np.ndarray:
    """Pairwise functional D[i, j] = Tr(C_i rho C_j^dagger) for stacked chains."""
    ch = _as_c128(chains, 3)
    mod = _active if ch.shape[0] <= _TABLE_LOOP_LIMIT else _pure
    return mod.decoherence_table(ch, _as_c128(rho, 2))


def history_weights(chains, rho) -> np.ndarray:
    """Diagonal of the pair table: Re Tr(C_h rho C_h^dagger) per history."""
    return _active.history_weights(_as_c128(chains, 3), _as_c128(rho, 2))


def max_offdiag_re(table: np.ndarray) -> float:
    """Largest |Re D[i, j]| over i != j (0.0 for a 1x1 table)."""
    n = table.shape[0]
    if n < 2:
        return 0.0
    re = np.abs(table.real).copy()
    np.fill_diagonal(re, 0.0)
    return float(re.max())
