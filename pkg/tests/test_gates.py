import warnings

import numpy as np
import pytest

from qudit_aqec.codes import four_qudit_code, stabilizer_generators
from qudit_aqec.gates import (
    GateSpec,
    controlled_x,
    c3,
    c4,
    encode,
    pauli_x,
    pauli_z,
    primary_labels,
    run_syndrome_circuit,
    secondary_eigen_labels,
    special_gates,
)


def is_unitary(u):
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-12)


@pytest.mark.parametrize("d", range(2, 8))
def test_clock_and_shift_algebra(d):
    x, z = pauli_x(d), pauli_z(d)
    w = np.exp(2j * np.pi / d)
    assert np.allclose(np.linalg.matrix_power(x, d), np.eye(d))
    assert np.allclose(np.linalg.matrix_power(z, d), np.eye(d))
    assert np.allclose(z @ x, w * x @ z)
    assert is_unitary(controlled_x(d))


def test_special_gates_are_unitary():
    for d in (2, 3, 4):
        for g in special_gates(d):
            assert is_unitary(g.matrix)
    assert is_unitary(c3()) and is_unitary(c4())
    with pytest.raises(ValueError):
        special_gates(5)
    with pytest.raises(ValueError):
        GateSpec("C4", (3, 2))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_encoder_produces_codewords(d):
    code = four_qudit_code(d)
    for m in range(d):
        v = np.zeros(d, dtype=complex)
        v[m] = 1
        assert np.allclose(encode(d, v), code.codewords[:, m], atol=1e-12)
    rng = np.random.default_rng(d)
    phi = rng.normal(size=d) + 1j * rng.normal(size=d)
    phi /= np.linalg.norm(phi)
    assert np.allclose(encode(d, phi), code.encode(phi), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_primary_labels_are_stabilizer_eigenvalues(d):
    labs = primary_labels(d)
    gens = stabilizer_generators(d)[1:]
    w = np.exp(2j * np.pi / d)
    for b, g in enumerate(gens):
        diag = np.diag(g.expand())
        assert np.allclose(diag, w ** labs[:, b])


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ancilla_readout_parity_matches_eigen_labels(d):
    sec = secondary_eigen_labels(d)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=d**4) + 1j * rng.normal(size=d**4)
    psi /= np.linalg.norm(psi)
    recs = run_syndrome_circuit(d, psi)
    assert np.isclose(sum(r.probability for r in recs), 1.0)
    for r in recs:
        support = np.abs(r.post_state) > 1e-12
        for b in range(2):
            assert np.all(sec[support, b] == r.outcome[2 + b] % 2)


def test_unnormalized_input_warns_and_rescales():
    psi = np.zeros(81, dtype=complex)
    psi[0] = 2.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        recs = run_syndrome_circuit(3, psi)
    assert caught
    assert np.isclose(sum(r.probability for r in recs), 1.0)
    assert all(isinstance(v, int) for v in recs[0].outcome)


def test_codewords_have_trivial_primary_syndrome():
    code = four_qudit_code(3)
    recs = run_syndrome_circuit(3, code.codewords[:, 1], secondary=False)
    assert len(recs) == 1 and recs[0].outcome[:2] == (0, 0)
