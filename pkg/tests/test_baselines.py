import numpy as np
import pytest

from oci.baselines import TwoEstimateCI, cast_basic_ci, cast_sci, ci_fused, ci_grid_search, default_epsilon
from oci.errors import DimensionError
from oci.solver import solve_kahan_oci
from oci.structure import InfoStructure


def test_equal_bounds():
    spec = TwoEstimateCI([[1.0]], [[1.0]])
    s = solve_kahan_oci(cast_basic_ci(spec, epsilon_r=1e-8), "trace")
    assert np.trace(s.B) == pytest.approx(1.0, abs=1e-6)
    assert ci_grid_search(spec)[0] == pytest.approx(1.0)


def test_dominated_estimate_gets_no_weight():
    spec = TwoEstimateCI([[1.0]], [[4.0]])
    s = solve_kahan_oci(cast_basic_ci(spec, epsilon_r=1e-8), "trace")
    assert np.trace(s.B) == pytest.approx(1.0, abs=1e-6)
    assert s.omega[0] == pytest.approx(1.0, abs=1e-4)
    best, w = ci_grid_search(spec)
    assert (best, w) == (pytest.approx(1.0), pytest.approx(1.0))


def test_casting_structure():
    spec = TwoEstimateCI(np.eye(2), 2 * np.eye(3), H2=np.ones((3, 2)))
    p = cast_basic_ci(spec)
    W1, W2 = (b.W for b in p.info.bounds)
    assert np.array_equal(W1, np.hstack([np.eye(2), np.zeros((2, 3))]))
    assert np.array_equal(W2, np.hstack([np.zeros((3, 2)), np.eye(3)]))
    assert np.array_equal(p.C, np.eye(5))
    assert p.metadata["epsilon_r"] == pytest.approx(default_epsilon(spec))
    assert p.metadata["approximation"]
    with pytest.raises(ValueError):
        cast_basic_ci(spec, epsilon_r=0.0)
    with pytest.raises(DimensionError):
        TwoEstimateCI(np.eye(2), np.eye(2), H1=np.ones((3, 1)))


def test_matrix_ci_matches_grid():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((2, 2))
    spec = TwoEstimateCI(A @ A.T + 0.2 * np.eye(2), np.diag([0.5, 3.0]))
    best, w = ci_grid_search(spec, step=1e-4)
    # the optimum is a vertex of the simplex here, where the conic solver stalls
    # for tiny epsilon and the closed-form direct search takes over
    s = solve_kahan_oci(cast_basic_ci(spec), "trace")
    assert "direct_search" in s.diagnostics
    assert s.diagnostics["optimality_gap"] is None
    assert np.trace(s.B) == pytest.approx(best, rel=1e-3)
    assert np.trace(ci_fused(spec, s.omega[0])) == pytest.approx(best, rel=1e-3)


def test_sci_casting():
    spec = TwoEstimateCI([[1.0]], [[2.0]], Xind1=[[0.5]], Xind2=[[0.3]])
    p = cast_sci(spec)
    assert np.allclose(p.R, np.diag([0.5, 0.3]))
    with pytest.raises(ValueError):
        cast_sci(TwoEstimateCI([[1.0]], [[2.0]]))
    # without correlated parts this is weighted least squares
    tiny = TwoEstimateCI([[1e-9]], [[1e-9]], Xind1=[[0.5]], Xind2=[[0.3]])
    s = solve_kahan_oci(cast_sci(tiny), "trace")
    assert s.B[0, 0] == pytest.approx(1.0 / (1 / 0.5 + 1 / 0.3), rel=1e-6)


def test_joint_bound_refines_sci():
    spec = TwoEstimateCI([[1.0]], [[2.0]], Xind1=[[0.5]], Xind2=[[0.3]])
    p = cast_sci(spec)
    s = solve_kahan_oci(p, "trace")
    pairs = [(b.W, b.X) for b in p.info.bounds] + [(np.eye(2), np.array([[1.0, 0.2], [0.2, 2.0]]))]
    t = solve_kahan_oci(p.with_info(InfoStructure.from_pairs(pairs)), "trace")
    assert np.trace(t.B) <= np.trace(s.B) + 1e-9
    assert np.trace(t.B) < np.trace(s.B) - 1e-3
