"""Covariance intersection and split covariance intersection as fusion problems.

Both fuse two estimates ``z_i = H_i x + e_i``. In the stacked problem the
unknown matrix ``P`` is the joint covariance of the (correlated part of the)
errors and each estimate contributes one diagonal-block bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionError
from .linalg import as_matrix, as_psd, inv_pd
from .problem import FusionProblem
from .structure import ComponentBound, InfoStructure


@dataclass(frozen=True)
class TwoEstimateCI:
    """Two estimates with bounds ``X1``, ``X2`` on their correlated errors.

    ``Xind1`` and ``Xind2`` are the known covariances of the independent
    error parts and are only needed for split CI. ``H1``/``H2`` default to the
    identity.
    """

    X1: np.ndarray
    X2: np.ndarray
    H1: np.ndarray | None = None
    H2: np.ndarray | None = None
    Xind1: np.ndarray | None = None
    Xind2: np.ndarray | None = None

    def __post_init__(self):
        X1 = as_psd(self.X1, definite=True, name="X1")
        X2 = as_psd(self.X2, definite=True, name="X2")
        H1 = np.eye(X1.shape[0]) if self.H1 is None else as_matrix(self.H1, "H1")
        H2 = np.eye(X2.shape[0]) if self.H2 is None else as_matrix(self.H2, "H2")
        if H1.shape[0] != X1.shape[0] or H2.shape[0] != X2.shape[0]:
            raise DimensionError("H_i must have as many rows as X_i")
        if H1.shape[1] != H2.shape[1]:
            raise DimensionError("H1 and H2 must share the state dimension")
        object.__setattr__(self, "X1", X1)
        object.__setattr__(self, "X2", X2)
        object.__setattr__(self, "H1", H1)
        object.__setattr__(self, "H2", H2)
        for name, X in (("Xind1", self.Xind1), ("Xind2", self.Xind2)):
            if X is not None:
                object.__setattr__(self, name, as_psd(X, definite=True, name=name))

    @property
    def o1(self) -> int:
        return self.X1.shape[0]

    @property
    def o2(self) -> int:
        return self.X2.shape[0]

    def stacked_H(self) -> np.ndarray:
        return np.vstack([self.H1, self.H2])

    def selectors(self):
        o1, o2 = self.o1, self.o2
        W1 = np.hstack([np.eye(o1), np.zeros((o1, o2))])
        W2 = np.hstack([np.zeros((o2, o1)), np.eye(o2)])
        return W1, W2


def default_epsilon(spec: TwoEstimateCI) -> float:
    """``1e-8`` times the average bound variance."""
    return 1e-8 * float(np.trace(spec.X1) + np.trace(spec.X2)) / max(spec.o1, spec.o2)


def cast_basic_ci(spec: TwoEstimateCI, epsilon_r: float | None = None) -> FusionProblem:
    """CI casting with a small independent noise ``epsilon_r * I`` standing in
    for the exact ``R = 0`` (the solver needs ``R > 0``)."""
    eps = default_epsilon(spec) if epsilon_r is None else float(epsilon_r)
    if not eps > 0:
        raise ValueError("epsilon_r must be positive")
    o = spec.o1 + spec.o2
    W1, W2 = spec.selectors()
    info = InfoStructure(o, (ComponentBound(W1, spec.X1), ComponentBound(W2, spec.X2)))
    return FusionProblem(
        spec.stacked_H(),
        eps * np.eye(o),
        np.eye(o),
        info,
        metadata={"casting": "basic_ci", "epsilon_r": eps, "approximation": "R = epsilon_r * I replaces R = 0"},
    )


def cast_sci(spec: TwoEstimateCI) -> FusionProblem:
    if spec.Xind1 is None or spec.Xind2 is None:
        raise ValueError("split CI needs Xind1 and Xind2")
    if spec.Xind1.shape != spec.X1.shape or spec.Xind2.shape != spec.X2.shape:
        raise DimensionError("independent parts must match the bound sizes")
    o = spec.o1 + spec.o2
    W1, W2 = spec.selectors()
    info = InfoStructure(o, (ComponentBound(W1, spec.X1), ComponentBound(W2, spec.X2)))
    return FusionProblem(
        spec.stacked_H(),
        block_diag(spec.Xind1, spec.Xind2),
        np.eye(o),
        info,
        metadata={"casting": "sci"},
    )


def ci_fused(spec: TwoEstimateCI, omega: float) -> np.ndarray:
    """Classical CI covariance for weight ``omega`` on the first estimate."""
    I1 = spec.H1.T @ inv_pd(spec.X1) @ spec.H1
    I2 = spec.H2.T @ inv_pd(spec.X2) @ spec.H2
    return inv_pd(omega * I1 + (1.0 - omega) * I2)


def ci_grid_search(spec: TwoEstimateCI, step: float = 1e-4):
    """Brute-force minimum of ``trace`` of the classical CI bound over a weight grid.

    Grid points where the fused information is singular are skipped.
    Returns ``(best_trace, best_omega)``.
    """
    I1 = spec.H1.T @ inv_pd(spec.X1) @ spec.H1
    I2 = spec.H2.T @ inv_pd(spec.X2) @ spec.H2
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    lam = np.linalg.eigvalsh(grid[:, None, None] * I1 + (1.0 - grid)[:, None, None] * I2)
    ok = lam[:, 0] > 1e-12 * max(1.0, float(np.abs(lam).max()))
    if not np.any(ok):
        return np.inf, None
    traces = np.where(ok, (1.0 / np.where(ok[:, None], lam, 1.0)).sum(axis=1), np.inf)
    i = int(np.argmin(traces))
    return float(traces[i]), float(grid[i])
