import numpy as np
import pytest

from instances import blue_bound, problems, single_bound_problem
from oci.conic import solve_clarabel
from oci.errors import InfeasibleError, NoProjectionBoundError
from oci.linalg import random_pd
from oci.oracle import check_consistency, check_lmi_certificates, check_weights
from oci.problem import FusionProblem, Objective, ProjectionBoundRequest
from oci.solver import (
    encode_sdp,
    phi_direct,
    phi_projected,
    reconstruct_from_gain,
    recover_gain,
    solve_kahan_oci,
    solve_with_projection_bound,
)
from oci.structure import InfoStructure


def _problem(H, R, C, pairs):
    return FusionProblem(np.atleast_2d(H), np.atleast_2d(R), np.atleast_2d(C), InfoStructure.from_pairs(pairs))


def _vehicle_layout():
    # three scalar estimates of a scalar state, the first and third share one bound
    C = np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 1]])
    pairs = [
        (np.eye(3)[[0, 1]], np.array([[2.0, 0.3], [0.3, 1.5]])),
        (np.eye(3)[[0, 2]], np.array([[2.0, -0.2], [-0.2, 1.0]])),
    ]
    return _problem(np.ones((3, 1)), np.diag([0.5, 0.7, 0.6]), C, pairs)


def test_zero_C_gives_weighted_least_squares():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((4, 2))
    R = random_pd(rng, 4)
    p = _problem(H, R, np.zeros((4, 2)), [(np.eye(2), np.eye(2)), (np.eye(2)[[0]], [[3.0]])])
    s = solve_kahan_oci(p, "trace")
    G = H.T @ np.linalg.solve(R, H)
    assert np.allclose(s.B, np.linalg.inv(G), atol=1e-8)
    assert np.allclose(s.K, np.linalg.solve(G, H.T @ np.linalg.inv(R)), atol=1e-8)


def test_single_bound_matches_closed_form():
    rng = np.random.default_rng(1)
    for _ in range(10):
        p = single_bound_problem(rng)
        s = solve_kahan_oci(p, "trace")
        assert np.allclose(s.B, blue_bound(p, p.info.bounds[0].X), rtol=1e-7, atol=1e-9)
        assert np.allclose(s.omega, [1.0])


def test_single_bound_direct_conic_solve():
    # the shortcut skips the conic solver for M = 1, so exercise it here
    rng = np.random.default_rng(2)
    p = single_bound_problem(rng)
    prog = encode_sdp(p, Objective.TRACE, precondition=False)
    res = solve_clarabel(prog)
    ref = np.trace(blue_bound(p, p.info.bounds[0].X))
    assert res.usable
    assert res.objective == pytest.approx(ref, rel=1e-5)


def test_two_scalar_estimates_against_weight_grid():
    r = np.array([0.4, 0.9])
    X = np.array([1.5, 0.6])
    p = _problem(np.ones((2, 1)), np.diag(r), np.eye(2), [(np.eye(2)[[0]], [[X[0]]]), (np.eye(2)[[1]], [[X[1]]])])
    s = solve_kahan_oci(p, "trace")
    w = np.arange(1, 1000) * 1e-3
    grid = 1.0 / (1.0 / (r[0] + X[0] / w) + 1.0 / (r[1] + X[1] / (1 - w)))
    assert s.B[0, 0] <= grid.min() + 1e-9
    assert s.B[0, 0] == pytest.approx(grid.min(), abs=1e-4)
    assert abs(s.omega[0] - w[np.argmin(grid)]) <= 2e-3


def test_recover_gain_examples():
    rng = np.random.default_rng(3)
    H = rng.standard_normal((3, 2))
    R = random_pd(rng, 3)
    G = H.T @ np.linalg.solve(R, H)
    p0 = _problem(H, R, np.zeros((3, 2)), [(np.eye(2), np.eye(2))])
    K0 = recover_gain(p0, np.eye(2))
    assert np.allclose(K0, np.linalg.solve(G, H.T @ np.linalg.inv(R)))

    C = rng.standard_normal((3, 2))
    X = random_pd(rng, 2)
    p = _problem(H, R, C, [(np.eye(2), X)])
    K = recover_gain(p, np.linalg.inv(X))
    S = R + C @ X @ C.T
    Si = np.linalg.inv(S)
    assert np.allclose(K, np.linalg.solve(H.T @ Si @ H, H.T @ Si), atol=1e-9)
    assert np.allclose(K @ H, np.eye(2), atol=1e-10)


def test_phi_forms_agree():
    rng = np.random.default_rng(4)
    for _ in range(20):
        o, m = rng.integers(1, 5, size=2)
        R = random_pd(rng, int(o))
        C = rng.standard_normal((o, m))
        A = rng.standard_normal((m, int(rng.integers(0, m + 1))))
        Y = A @ A.T
        assert np.allclose(phi_direct(R, C, Y), phi_projected(R, C, Y), atol=1e-8)


def test_reconstruct_with_zero_C():
    rng = np.random.default_rng(5)
    H = rng.standard_normal((3, 2))
    R = random_pd(rng, 3)
    p = _problem(H, R, np.zeros((3, 2)), [(np.eye(2), np.eye(2))])
    K = recover_gain(p, np.eye(2))
    Y, U, Bb = reconstruct_from_gain(p, K, 3.0 * np.eye(2))
    assert np.allclose(Y, 0.0)
    assert np.allclose(U, 0.0, atol=1e-10)
    assert np.allclose(Bb, np.linalg.inv(p.G))


def test_reconstruct_round_trip():
    p = _vehicle_layout()
    s = solve_kahan_oci(p, "trace")
    Y, U, Bb = reconstruct_from_gain(p, s.K, s.B)
    assert np.trace(Bb) <= np.trace(s.B) + 1e-8
    assert np.allclose(Bb, np.linalg.inv(p.G - U), atol=1e-8)
    # scalar state: K C spans a single direction, so K stays optimal and 2B is returned
    _, _, Bi = reconstruct_from_gain(p, s.K, 2.0 * s.B)
    assert np.trace(Bi) == pytest.approx(2.0 * np.trace(s.B), rel=1e-8)


def test_reconstruct_inflated_bound():
    improved = 0
    for p in problems(25, seed=8):
        try:
            s = solve_kahan_oci(p, "trace")
        except InfeasibleError:
            continue
        _, _, Bi = reconstruct_from_gain(p, s.K, 2.0 * s.B)
        gain = 2.0 * np.trace(s.B) - np.trace(Bi)
        assert gain >= -1e-8 * np.trace(s.B)
        KC = s.K @ p.C
        if p.o == p.n and np.linalg.matrix_rank(KC, tol=1e-9 * max(1.0, np.linalg.norm(KC))) == p.n:
            # K = H^-1 is forced and the reconstructed ellipsoid reproduces 2B exactly
            assert gain <= 1e-8 * np.trace(s.B)
        improved += gain > 1e-6 * np.trace(s.B)
    assert improved > 0


def test_reconstruct_rejects_inconsistent_pair():
    p = _vehicle_layout()
    s = solve_kahan_oci(p, "trace")
    with pytest.raises(Exception):
        reconstruct_from_gain(p, s.K, 1e-3 * s.B)
    with pytest.raises(ValueError):
        reconstruct_from_gain(p, s.K.T, s.B)


def test_certificates_and_weights():
    for p in problems(15, seed=6):
        try:
            s = solve_kahan_oci(p, "trace")
        except InfeasibleError:
            continue
        assert check_lmi_certificates(p, s)
        assert check_weights(p, s)
        assert np.linalg.norm(s.K @ p.H - np.eye(p.n)) <= 1e-8
        assert check_consistency(p, s.K, s.B, samples=200, seed=0).passed


def test_logdet_objective():
    p = _vehicle_layout()
    t = solve_kahan_oci(p, "trace")
    d = solve_kahan_oci(p, "logdet")
    assert d.objective is Objective.LOGDET
    assert check_consistency(p, d.K, d.B, samples=300, seed=1).passed
    assert np.allclose(d.B, np.linalg.inv(p.G - d.U), atol=1e-8)
    assert np.linalg.slogdet(d.B)[1] <= np.linalg.slogdet(t.B)[1] + 1e-7


def test_infeasible_problem_raises():
    p = _problem(np.eye(2), np.eye(2), np.eye(2), [(np.array([[1.0, 0.0]]), [[2.0]])])
    with pytest.raises(InfeasibleError) as exc:
        solve_kahan_oci(p, "trace")
    assert exc.value.reason


def test_scaling_invariance():
    p = _vehicle_layout()
    s = solve_kahan_oci(p, "trace")
    a = 3.7
    q = _problem(p.H, a * p.R, p.C, [(b.W, a * b.X) for b in p.info.bounds])
    t = solve_kahan_oci(q, "trace")
    assert np.trace(t.B) == pytest.approx(a * np.trace(s.B), rel=1e-6)
    assert np.allclose(t.K, s.K, atol=1e-5)


def test_adding_a_bound_never_hurts():
    p = _vehicle_layout()
    s = solve_kahan_oci(p, "trace")
    pairs = [(b.W, b.X) for b in p.info.bounds] + [(np.eye(3)[[1, 2]], np.diag([1.0, 0.8]))]
    t = solve_kahan_oci(_problem(p.H, p.R, p.C, pairs), "trace")
    assert np.trace(t.B) <= np.trace(s.B) + 1e-8


def test_encoding_block_sizes_and_digest():
    tiny = _problem([[1.0]], [[1.0]], [[1.0]], [([[1.0]], [[1.0]])])
    assert encode_sdp(tiny, Objective.TRACE).psd_block_sizes() == [2, 2]
    p = _vehicle_layout()
    prog = encode_sdp(p, Objective.TRACE)
    assert prog.psd_block_sizes() == [2, 4]
    assert prog.digest() == encode_sdp(p, Objective.TRACE).digest()


def test_projection_bound():
    p = _vehicle_layout()
    plain = solve_kahan_oci(p, "trace")
    req = ProjectionBoundRequest(np.eye(3))
    s = solve_with_projection_bound(p, "trace", req)
    assert s.M.shape == (3, 3)
    assert np.trace(s.B) == pytest.approx(np.trace(plain.B), rel=1e-3)
    assert check_lmi_certificates(p, s)
    with pytest.raises(ValueError):
        ProjectionBoundRequest(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        solve_kahan_oci(p, "trace", req=ProjectionBoundRequest(np.eye(2)))


def test_projection_bound_single_full_bound_approaches_X():
    rng = np.random.default_rng(7)
    X = random_pd(rng, 2)
    p = _problem(np.ones((2, 1)), np.diag([0.3, 0.5]), np.eye(2), [(np.eye(2), X)])
    s = solve_kahan_oci(p, "trace", req=ProjectionBoundRequest(np.eye(2), gamma=1e-6))
    assert np.allclose(s.M, X, atol=1e-6)


def test_uncovered_projection_is_rejected():
    p = _problem(np.ones((2, 1)), np.eye(2), np.eye(2)[:, [0]] @ np.eye(2)[[0]], [(np.eye(2)[[0]], [[1.0]])])
    with pytest.raises(NoProjectionBoundError):
        solve_kahan_oci(p, "trace", req=ProjectionBoundRequest(np.eye(2)[[1]]))
