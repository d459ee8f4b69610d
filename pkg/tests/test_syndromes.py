import numpy as np
import pytest

from qudit_aqec.channel import kraus_operator
from qudit_aqec.codes import four_qudit_code
from qudit_aqec.kl import correctable_set
from qudit_aqec.syndromes import (
    build_syndrome_table,
    golden,
    primary_overview,
    primary_syndrome,
    syndrome_decoder,
)


def test_qutrit_table_matches_golden():
    assert build_syndrome_table(3).to_csv() == golden("syndromes_d3.csv")


def test_d5_table_matches_golden():
    assert build_syndrome_table(5).to_csv() == golden("syndromes_d5.csv")


def test_primary_overview_matches_golden():
    assert primary_overview() == golden("primary_overview.csv")


def test_primary_syndromes_follow_general_formula():
    d = 7
    for x in range(1, d):
        assert primary_syndrome(d, (x, 0, 0, 0)) == ((-x) % d, 0)
        assert primary_syndrome(d, (0, x, 0, 0)) == (x, 0)
        assert primary_syndrome(d, (0, 0, x, 0)) == (0, (-x) % d)
        assert primary_syndrome(d, (0, 0, 0, x)) == (0, x)


def test_primary_map_injective_for_d5_and_collisions_for_small_d():
    assert build_syndrome_table(5).collisions() == []
    coll = {frozenset(c) for c in build_syndrome_table(3).collisions()}
    assert frozenset({(2, 0, 0, 0), (0, 1, 0, 0)}) in coll
    assert len(coll) == 4


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_decoder_is_trace_non_increasing(d):
    rec = syndrome_decoder(d, 0.05)
    assert rec.max_effect_eigenvalue() <= 1 + 1e-10
    assert rec.completeness_error() <= 1e-10


@pytest.mark.parametrize("d", [3])
def test_decoder_restores_correctable_errors(d):
    g = 0.1
    code = four_qudit_code(d)
    rec = syndrome_decoder(d, g)
    _, a1, a2 = correctable_set(d)
    for e in a1 + a2:
        img = kraus_operator(d, g, e).expand() @ code.codewords
        for m in range(d):
            v = img[:, m] / np.linalg.norm(img[:, m])
            out = rec.apply(np.outer(v, v.conj()))
            target = code.codewords[:, m]
            assert np.vdot(target, out @ target).real >= 1 - 1e-9


def test_qubit_decoder_detects_two_site_errors_only():
    rec, assigns = syndrome_decoder(2, 0.1, return_assignments=True)
    by_err = {a.error: a for a in assigns}
    for e in [(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)]:
        assert not by_err[e].corrected and by_err[e].rank == 1
    for e in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]:
        assert by_err[e].corrected
