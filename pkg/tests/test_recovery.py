import numpy as np
import pytest

from qudit_aqec.channel import amplitude_damping, kraus_operator
from qudit_aqec.codes import four_qudit_code, surface_variant_code
from qudit_aqec.kl import correctable_set
from qudit_aqec.recovery import (
    PreconditionError,
    RecoveryChannel,
    cafaro_recovery,
    leung_cafaro_check,
    leung_recovery,
    petz_recovery,
)
from qudit_aqec.tensor import psd_inv_sqrt


def corr_errors(d, g):
    _, a1, a2 = correctable_set(d)
    return [kraus_operator(d, g, e) for e in a1 + a2]


@pytest.mark.parametrize("d", [2, 3])
def test_petz_matches_dense_formula(d):
    g = 0.1
    code = four_qudit_code(d)
    ks = amplitude_damping(d, g)
    rec = petz_recovery(code, ks)
    p = code.projector()
    dense = [op.expand() for op in ks]
    ep = sum(e @ p @ e.conj().T for e in dense)
    inv = psd_inv_sqrt(ep)
    for r, e in zip(rec.kraus, dense):
        assert np.abs(r - p @ e.conj().T @ inv).max() < 1e-9


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("builder", ["petz", "leung", "cafaro"])
def test_recovery_completeness(d, builder):
    g = 0.05
    code = four_qudit_code(d)
    if builder == "petz":
        rec = petz_recovery(code, amplitude_damping(d, g))
    elif builder == "leung":
        rec = leung_recovery(code, corr_errors(d, g))
    else:
        rec = cafaro_recovery(code, corr_errors(d, g))
    assert rec.max_effect_eigenvalue() <= 1 + 1e-10
    assert rec.completeness_error() <= 1e-10


def test_petz_recovers_codewords_under_no_noise():
    code = four_qudit_code(3)
    rec = petz_recovery(code, amplitude_damping(3, 0.0))
    rho = np.outer(code.codewords[:, 2], code.codewords[:, 2].conj())
    assert np.allclose(rec.apply(rho), rho, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("gamma", [0.01, 0.1])
def test_leung_cafaro_equivalence(d, gamma):
    res = leung_cafaro_check(four_qudit_code(d), corr_errors(d, gamma))
    assert res.equal and res.max_deviation <= 1e-10


def test_leung_precondition():
    code, _ = surface_variant_code(3, "c")
    with pytest.raises(PreconditionError):
        leung_recovery(code, corr_errors(3, 0.1))


def test_cafaro_precondition_names_indices():
    code, _ = surface_variant_code(3, "c")
    errs = corr_errors(3, 0.1)
    with pytest.raises(PreconditionError, match="k=A_"):
        cafaro_recovery(code, errs)


def test_recovery_channel_validation():
    code = four_qudit_code(2)
    with pytest.raises(ValueError):
        RecoveryChannel(code, np.zeros((1, 2, 16)), "Unknown")
    with pytest.raises(ValueError):
        RecoveryChannel(code, np.zeros((1, 2, 8)), "Petz")
    empty = RecoveryChannel(code, np.zeros((0, 2, 16)), "Leung")
    assert len(empty) == 0 and empty.completeness_error() < 1e-12
