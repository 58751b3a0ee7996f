from __future__ import annotations

import numpy as np
import pytest

import naive
from chkit import kernels


def random_stack(seed: int, n_hist: int, n_slots: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return (rng.normal(size=(n_hist, n_slots, dim, dim))
            + 1j * rng.normal(size=(n_hist, n_slots, dim, dim)))


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")


def test_chain_products_against_oracle(backend):
    ev = np.ascontiguousarray(random_stack(1, 4, 3, 3).astype(np.complex128))
    out = backend.chain_products(ev)
    for h in range(4):
        expected = naive.chain([ev[h, k] for k in range(3)])
        assert naive.max_abs_entry(
            naive.mat_sub(naive.to_list(out[h]), expected)) <= 1e-12


def test_single_slot_chain_is_copy(backend):
    ev = np.ascontiguousarray(random_stack(2, 3, 1, 4).astype(np.complex128))
    out = backend.chain_products(ev)
    assert np.allclose(out, ev[:, 0])
    out[0, 0, 0] = 123  # must not alias the input
    assert ev[0, 0, 0, 0] != 123


def test_decoherence_table_against_oracle(backend):
    ev = np.ascontiguousarray(random_stack(3, 5, 2, 3).astype(np.complex128))
    rho = np.eye(3, dtype=np.complex128) / 3
    chains = backend.chain_products(ev)
    table = backend.decoherence_table(chains, rho)
    for i in range(5):
        for j in range(5):
            expected = naive.dfunc([ev[i, k] for k in range(2)],
                                   [ev[j, k] for k in range(2)], rho)
            assert abs(complex(table[i, j]) - expected) <= 1e-12


def test_history_weights_match_table_diagonal(backend):
    ev = np.ascontiguousarray(random_stack(4, 6, 3, 4).astype(np.complex128))
    rho = np.eye(4, dtype=np.complex128) / 4
    chains = backend.chain_products(ev)
    table = backend.decoherence_table(chains, rho)
    w = backend.history_weights(chains, rho)
    assert np.allclose(w, np.diag(table).real, atol=1e-12)


def test_backends_agree():
    backends = kernels.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not available")
    ev = np.ascontiguousarray(random_stack(5, 16, 3, 5).astype(np.complex128))
    rho = np.eye(5, dtype=np.complex128) / 5
    results = {}
    for name, mod in backends.items():
        chains = mod.chain_products(ev)
        results[name] = (chains, mod.decoherence_table(chains, rho),
                         mod.history_weights(chains, rho))
    a, b = results["python"], results["compiled"]
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) <= 1e-12


def test_backend_deterministic(backend):
    ev = np.ascontiguousarray(random_stack(6, 8, 3, 3).astype(np.complex128))
    rho = np.eye(3, dtype=np.complex128) / 3
    c1 = backend.chain_products(ev)
    c2 = backend.chain_products(ev)
    assert np.array_equal(c1, c2)
    t1 = backend.decoherence_table(c1, rho)
    t2 = backend.decoherence_table(c1, rho)
    assert np.array_equal(t1, t2)


def test_max_offdiag_re():
    t = np.array([[5.0, 0.1j], [0.2 + 0.3j, 7.0]])
    assert kernels.max_offdiag_re(t) == pytest.approx(0.2)
    assert kernels.max_offdiag_re(np.array([[3.0]])) == 0.0


def test_dispatch_coerces_dtype():
    ev = np.zeros((1, 1, 2, 2))  # float64 input
    ev[0, 0] = np.eye(2)
    out = kernels.chain_products(ev)
    assert out.dtype == np.complex128
