import dataclasses

import numpy as np
import pytest

from oci.linalg import random_pd, random_psd
from oci.oracle import (
    check_consistency,
    check_lmi_certificates,
    check_prop1_schur,
    check_prop2_identity,
    check_weights,
)
from oci.problem import FusionProblem
from oci.solver import solve_kahan_oci
from oci.structure import InfoStructure


def _single(rng):
    X = random_pd(rng, 2)
    p = FusionProblem(np.ones((2, 1)), np.diag([0.4, 0.6]), np.eye(2), InfoStructure.from_pairs([(np.eye(2), X)]))
    return p, solve_kahan_oci(p, "trace")


def test_consistency_verdicts():
    p, s = _single(np.random.default_rng(0))
    assert check_consistency(p, s.K, 10 * s.B, samples=200, seed=0).passed
    v = check_consistency(p, s.K, 0.5 * s.B, samples=200, seed=0)
    assert not v.passed
    assert v.max_violation > 0
    assert v.samples_checked == 200
    assert 0 <= v.worst_sample_index < 200


def test_worst_case_is_attained_at_the_bound():
    p, s = _single(np.random.default_rng(1))
    X = p.info.bounds[0].X
    v = check_consistency(p, s.K, s.B, samples=500, seed=3, boundary_fraction=1.0)
    # P = X is admissible and makes the fused covariance equal B
    assert v.max_violation == pytest.approx(0.0, abs=1e-6)
    worst = s.K @ (p.R + p.C @ X @ p.C.T) @ s.K.T
    assert np.allclose(worst, s.B, atol=1e-9)


def test_biased_gain_rejected():
    p, s = _single(np.random.default_rng(2))
    with pytest.raises(ValueError):
        check_consistency(p, 2 * s.K, s.B)


def test_lmi_and_weight_checks():
    p, s = _single(np.random.default_rng(3))
    assert check_lmi_certificates(p, s)
    assert check_weights(p, s)
    # a U that claims more information than the data provide breaks the second block
    bad = dataclasses.replace(s, U=s.U + 10.0 * np.eye(1))
    assert not check_lmi_certificates(p, bad)
    assert not check_weights(p, dataclasses.replace(s, omega=np.array([1.5])))
    assert not check_weights(p, dataclasses.replace(s, omega=np.array([0.5, 0.5])))


def test_weighting_identity_examples():
    rng = np.random.default_rng(4)
    R = random_pd(rng, 3)
    C = rng.standard_normal((3, 2))
    # full-rank Y
    Y = random_pd(rng, 2)
    assert check_prop2_identity(R, C, Y) <= 1e-8
    Ri = np.linalg.inv(R)
    smw = np.linalg.inv(R + C @ np.linalg.inv(Y) @ C.T)
    lhs = Ri - Ri @ C @ np.linalg.inv(Y + C.T @ Ri @ C) @ C.T @ Ri
    assert np.allclose(lhs, smw)
    # zero C, zero Y, rank-deficient Y
    assert check_prop2_identity(R, np.zeros((3, 2)), Y) <= 1e-10
    assert check_prop2_identity(R, C, np.zeros((2, 2))) <= 1e-8
    assert check_prop2_identity(R, C, random_psd(rng, 2, rank=1)) <= 1e-8


def test_schur_facts():
    rep = check_prop1_schur(trials=300, seed=5)
    assert rep.ok
    assert set(rep.checked) == {"i", "ii", "iii", "iv", "v"}
    assert all(c > 0 for c in rep.checked.values())
