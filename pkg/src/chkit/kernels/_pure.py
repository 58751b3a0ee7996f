"""Pure-Python (numpy) kernel implementations.

Fallback for environments without the compiled extension; also the
reference the compiled kernels are tested against.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def chain_products(events: np.ndarray) -> np.ndarray:
    """events: (H, S, N, N). Returns (H, N, N) with out[h] = E_{S-1} @ ... @ E_0."""
    H, S, N, _ = events.shape
    out = np.array(events[:, 0], dtype=np.complex128)
    for k in range(1, S):
        out = events[:, k] @ out
    return np.ascontiguousarray(out)


def decoherence_table(chains: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """chains: (H, N, N), rho: (N, N). Returns D with D[i, j] = Tr(C_i rho C_j^dag)."""
    H = chains.shape[0]
    g = (chains @ rho).reshape(H, -1)
    return g @ chains.reshape(H, -1).conj().T


def history_weights(chains: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """chains: (H, N, N), rho: (N, N). Returns Re Tr(C_h rho C_h^dag) per history."""
    g = chains @ rho
    return np.einsum("hab,hab->h", g, chains.conj()).real
