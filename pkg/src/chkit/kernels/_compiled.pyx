# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot kernels: chain products and pair-trace tables.

Loops are hand-rolled because the matrices are tiny (N <= 64, typically
N = 3); per-call numpy dispatch overhead dominates at these sizes.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def chain_products(const double complex[:, :, :, ::1] events):
    """events: (H, S, N, N). Returns (H, N, N) with out[h] = E_{S-1} @ ... @ E_0."""
    cdef Py_ssize_t H = events.shape[0]
    cdef Py_ssize_t S = events.shape[1]
    cdef Py_ssize_t N = events.shape[2]
    out_np = np.empty((H, N, N), dtype=np.complex128)
    tmp_np = np.empty((N, N), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_np
    cdef double complex[:, ::1] tmp = tmp_np
    cdef Py_ssize_t h, k, i, j, l
    cdef double complex acc
    with nogil:
        for h in range(H):
            for i in range(N):
                for j in range(N):
                    out[h, i, j] = events[h, 0, i, j]
            for k in range(1, S):
                for i in range(N):
                    for j in range(N):
                        acc = 0
                        for l in range(N):
                            acc = acc + events[h, k, i, l] * out[h, l, j]
                        tmp[i, j] = acc
                for i in range(N):
                    for j in range(N):
                        out[h, i, j] = tmp[i, j]
    return out_np


def decoherence_table(const double complex[:, :, ::1] chains,
                      const double complex[:, ::1] rho):
    """chains: (H, N, N), rho: (N, N). Returns D with D[i, j] = Tr(C_i rho C_j^dag)."""
    cdef Py_ssize_t H = chains.shape[0]
    cdef Py_ssize_t N = chains.shape[1]
    g_np = np.empty((H, N, N), dtype=np.complex128)
    d_np = np.empty((H, H), dtype=np.complex128)
    cdef double complex[:, :, ::1] g = g_np
    cdef double complex[:, ::1] d = d_np
    cdef Py_ssize_t h, i, j, a, b, l
    cdef double complex acc
    with nogil:
        for h in range(H):
            for a in range(N):
                for b in range(N):
                    acc = 0
                    for l in range(N):
                        acc = acc + chains[h, a, l] * rho[l, b]
                    g[h, a, b] = acc
        for i in range(H):
            for j in range(H):
                acc = 0
                for a in range(N):
                    for b in range(N):
                        acc = acc + g[i, a, b] * chains[j, a, b].conjugate()
                d[i, j] = acc
    return d_np


def history_weights(const double complex[:, :, ::1] chains,
                    const double complex[:, ::1] rho):
    """chains: (H, N, N), rho: (N, N). Returns Re Tr(C_h rho C_h^dag) per history."""
    cdef Py_ssize_t H = chains.shape[0]
    cdef Py_ssize_t N = chains.shape[1]
    w_np = np.empty(H, dtype=np.float64)
    cdef double[::1] w = w_np
    cdef Py_ssize_t h, a, b, l
    cdef double complex acc, gab
    cdef double s
    with nogil:
        for h in range(H):
            s = 0.0
            for a in range(N):
                for b in range(N):
                    gab = 0
                    for l in range(N):
                        gab = gab + chains[h, a, l] * rho[l, b]
                    acc = gab * chains[h, a, b].conjugate()
                    s = s + acc.real
            w[h] = s
    return w_np
