import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qudit_aqec import _kernels
from qudit_aqec.tensor import (
    DimensionError,
    FactoredOperator,
    apply_factored,
    apply_local,
    kron_all,
    polar_isometry,
    polar_parts,
    psd_inv_sqrt,
    psd_sqrt,
    support_projector,
)


def random_factors(rng, n, d):
    return rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))


@settings(max_examples=40, deadline=None)
@given(d=st.integers(2, 4), n=st.integers(1, 4), k=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_factored_matches_dense_kron(d, n, k, seed):
    rng = np.random.default_rng(seed)
    op = FactoredOperator(random_factors(rng, n, d))
    psi = rng.normal(size=(d**n, k)) + 1j * rng.normal(size=(d**n, k))
    dense = kron_all(op.factors) @ psi
    assert np.abs(apply_factored(op, psi) - dense).max() <= 1e-12 * max(1.0, np.abs(dense).max())


def test_numpy_and_numba_kernels_agree():
    rng = np.random.default_rng(7)
    f = random_factors(rng, 4, 3)
    psi = rng.normal(size=(81, 3)) + 0j
    a = _kernels.apply_factored_numpy(f, psi)
    b = _kernels.apply_factored_numba(f, psi)
    assert np.abs(a - b).max() < 1e-12


def test_identity_factors_skipped_without_aliasing():
    f = np.stack([np.eye(2, dtype=complex)] * 3)
    psi = np.arange(8, dtype=complex).reshape(8, 1)
    out = _kernels.apply_factored_numpy(f, psi)
    assert np.array_equal(out, psi) and out is not psi


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, QUDIT_AQEC_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from qudit_aqec._kernels import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == expected


def test_vector_input_and_dimension_error():
    op = FactoredOperator(np.stack([np.eye(2)] * 2))
    v = np.array([1, 0, 0, 0], dtype=complex)
    assert apply_factored(op, v).shape == (4,)
    with pytest.raises(DimensionError):
        apply_factored(op, np.ones(8))
    with pytest.raises(DimensionError):
        FactoredOperator(np.ones((2, 2, 3)))


def test_adjoint_and_product():
    rng = np.random.default_rng(1)
    a = FactoredOperator(random_factors(rng, 3, 2), weight=1)
    b = FactoredOperator(random_factors(rng, 3, 2), weight=2)
    assert np.allclose(a.adjoint().expand(), a.expand().conj().T)
    ab = a @ b
    assert ab.weight == 3
    assert np.allclose(ab.expand(), a.expand() @ b.expand())


def test_apply_local_matches_dense_embedding():
    rng = np.random.default_rng(3)
    dims = (3, 2, 3)
    state = rng.normal(size=18) + 1j * rng.normal(size=18)
    gate = rng.normal(size=(6, 6)) + 0j
    # gate on sites (2, 1): reorder wires so the dense check is a plain kron
    out = apply_local(state, gate, (2, 1), dims)
    t = state.reshape(dims).transpose(0, 2, 1).reshape(3, 6)
    ref = (t @ gate.T).reshape(3, 3, 2).transpose(0, 2, 1).reshape(-1)
    assert np.allclose(out, ref)
    with pytest.raises(DimensionError):
        apply_local(state, gate, (1, 1), dims)


def test_psd_functions():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    m = x @ x.conj().T  # rank 3
    s = psd_sqrt(m)
    assert np.allclose(s @ s, m, atol=1e-10)
    inv = psd_inv_sqrt(m)
    proj = support_projector(m)
    assert np.allclose(inv @ m @ inv, proj, atol=1e-9)
    assert np.isclose(np.trace(proj).real, 3)


def test_polar_isometry_partial():
    rng = np.random.default_rng(11)
    k = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
    k[:, 2] = k[:, 0]  # rank 2
    iso, rank = polar_isometry(k)
    assert rank == 2
    u, p, r = polar_parts(k)
    assert r == 2
    assert np.allclose(u @ p, k, atol=1e-10)
    g = iso.conj().T @ iso
    assert np.allclose(g @ g, g, atol=1e-10)
