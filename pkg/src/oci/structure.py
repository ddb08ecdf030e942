"""Partial knowledge about an unknown correlation matrix ``P``.

The admissible set is every ``P > 0`` of size ``m`` with
``W_b P W_b^T <= X_b`` for each bound ``b``. The equivalent inverse form is
``P^{-1} >= Y_b = W_b^T X_b^{-1} W_b``, and any convex combination of the
``Y_b`` is again a valid lower bound on ``P^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, NotPSDError
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_matrix,
    as_psd,
    inv_pd,
    inv_sqrtm_pd,
    max_eig,
    orth_complement,
    orth,
    spectral_split,
    symmetrize,
)

WEIGHT_FLOOR = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ComponentBound:
    """One primal bound ``W P W^T <= X``."""

    W: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        W = as_matrix(self.W, "W")
        if np.ndim(self.W) == 1:
            # a bare vector is one selector row
            W = W.reshape(1, -1)
        X = as_psd(self.X, definite=True, name="X")
        if X.shape[0] != W.shape[0]:
            raise DimensionError(f"X is {X.shape[0]}x{X.shape[0]} but W has {W.shape[0]} rows")
        if np.any(np.all(W == 0.0, axis=1)):
            raise ValueError("W has an all-zero row, which makes that bound row vacuous")
        object.__setattr__(self, "W", _frozen(W))
        object.__setattr__(self, "X", _frozen(X))

    @property
    def m(self) -> int:
        return self.W.shape[1]

    @property
    def o(self) -> int:
        return self.W.shape[0]

    def inverse(self) -> np.ndarray:
        return to_inverse_bound(self)


@dataclass(frozen=True)
class InfoStructure:
    m: int
    bounds: tuple = field(default_factory=tuple)

    def __post_init__(self):
        bounds = tuple(self.bounds)
        if self.m < 1:
            raise DimensionError("m must be positive")
        if not bounds:
            raise ValueError("at least one bound is required")
        for i, b in enumerate(bounds):
            if not isinstance(b, ComponentBound):
                raise TypeError(f"bound {i} is not a ComponentBound")
            if b.m != self.m:
                raise DimensionError(f"bound {i} has {b.m} columns, expected {self.m}")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]) -> "InfoStructure":
        bounds = tuple(ComponentBound(W, X) for W, X in pairs)
        if not bounds:
            raise ValueError("at least one bound is required")
        return cls(bounds[0].m, bounds)

    @property
    def M(self) -> int:
        return len(self.bounds)

    def inverse_bounds(self) -> list:
        return [to_inverse_bound(b) for b in self.bounds]


def to_inverse_bound(b: ComponentBound) -> np.ndarray:
    """``Y = W^T X^{-1} W``."""
    try:
        Xi = inv_pd(b.X)
    except np.linalg.LinAlgError as exc:
        raise NotPSDError("X is not invertible") from exc
    return symmetrize(b.W.T @ Xi @ b.W)


def stacked_W(info: InfoStructure) -> np.ndarray:
    return np.vstack([b.W for b in info.bounds])


def aggregate_inverse_bound(info: InfoStructure) -> np.ndarray:
    """``W^T blockdiag(X_1..X_M)^{-1} W / M``, i.e. uniform Kahan weights."""
    Y = sum(to_inverse_bound(b) for b in info.bounds)
    return symmetrize(Y / info.M)


def clean_weights(omega, tol: Tolerances = DEFAULT_TOL, floor: float = WEIGHT_FLOOR) -> np.ndarray:
    """Project solver output onto the simplex.

    Negative round-off and entries below ``floor`` are zeroed, then the vector
    is renormalized. Raises if the input is far from the simplex.
    """
    w = np.asarray(omega, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a non-empty finite vector")
    if np.min(w) < -tol.tol_check or abs(w.sum() - 1.0) > max(tol.tol_check, 1e-4):
        raise ValueError(f"weights {w} are not on the simplex")
    w = np.where(w < floor, 0.0, w)
    s = w.sum()
    if s <= 0:
        raise ValueError("all weights vanished after cleanup")
    return w / s


def simplex_weights(omega, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate weights without modifying them."""
    w = np.asarray(omega, dtype=float).ravel()
    if np.any(w < 0) or abs(w.sum() - 1.0) > tol.tol_check:
        raise ValueError(f"weights {w} are not on the simplex")
    return w


def kahan_combine(info: InfoStructure, omega, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    w = simplex_weights(omega, tol)
    if w.size != info.M:
        raise DimensionError(f"got {w.size} weights for {info.M} bounds")
    Y = np.zeros((info.m, info.m))
    for wb, b in zip(w, info.bounds):
        if wb != 0.0:
            Y += wb * to_inverse_bound(b)
    return symmetrize(Y)


def contains(info: InfoStructure, P, tol: Tolerances = DEFAULT_TOL) -> bool:
    P = symmetrize(as_matrix(P, "P"))
    if P.shape[0] != info.m:
        raise DimensionError(f"P is {P.shape[0]}x{P.shape[0]}, expected {info.m}")
    for b in info.bounds:
        if max_eig(b.W @ P @ b.W.T - b.X) > tol.tol_check:
            return False
    return True


def _activity(info: InfoStructure, G: np.ndarray, whiteners=None) -> float:
    """Largest ``lambda_max(X_b^{-1/2} W_b G W_b^T X_b^{-1/2})`` over bounds."""
    if whiteners is None:
        whiteners = [inv_sqrtm_pd(b.X) @ b.W for b in info.bounds]
    return max(max_eig(A @ G @ A.T) for A in whiteners)


def sample_admissible(
    info: InfoStructure,
    count: int,
    seed: int,
    boundary_fraction: float = 0.5,
    tol: Tolerances = DEFAULT_TOL,
) -> list:
    """Draw admissible correlation matrices.

    Each draw picks a shape ``G`` and scales it by the largest ``alpha`` that
    keeps ``alpha * G`` admissible. A ``boundary_fraction`` share of draws sit
    on that boundary (one bound active); the rest are shrunk by a uniform
    factor. Shapes alternate between random full-rank matrices, nearly rank-one
    matrices and inverses of random Kahan combinations, which are the shapes
    that make the Kahan bounds tight. Directions that no bound constrains get
    extra random mass so the samples are not confined to a bounded region.
    """
    if count <= 0:
        return []
    rng = np.random.default_rng(seed)
    m = info.m
    Ys = info.inverse_bounds()
    free = orth_complement(orth(stacked_W(info).T, tol))
    whiteners = [inv_sqrtm_pd(b.X) @ b.W for b in info.bounds]
    out = []
    for _ in range(count):
        kind = rng.integers(3)
        if kind == 0:
            A = rng.standard_normal((m, m))
            G = A @ A.T / m + 0.05 * np.eye(m)
        elif kind == 1:
            v = rng.standard_normal(m)
            G = np.outer(v, v) + 1e-3 * (v @ v) * np.eye(m)
        else:
            w = rng.dirichlet(np.ones(info.M))
            Y = sum(wb * Yb for wb, Yb in zip(w, Ys))
            eps = 1e-3 * max(1.0, max_eig(Y))
            G = inv_pd(Y + eps * np.eye(m))
        if free.shape[1]:
            c = rng.standard_normal((free.shape[1], free.shape[1]))
            G = G + 10.0 ** rng.uniform(-1, 3) * (free @ (c @ c.T) @ free.T) * max_eig(G)
        G = symmetrize(G)
        act = _activity(info, G, whiteners)
        # 1 - 1e-12 guards against round-off pushing a boundary sample out
        alpha = (1.0 - 1e-12) / act
        t = 1.0 if rng.random() < boundary_fraction else rng.uniform(0.05, 1.0)
        P = symmetrize(alpha * t * G)
        lo = np.linalg.eigvalsh(P)[0]
        if lo < tol.tol_pd:
            # nudging by tol_pd may overshoot the boundary by a negligible amount
            P = P + (tol.tol_pd - lo) * np.eye(m)
        out.append(P)
    return out


@dataclass(frozen=True)
class EllipsoidPoints:
    """Boundary points of ``{x : x^T Y x <= 1}``.

    ``degenerate`` is set when ``Y`` is singular; unbounded directions are
    then cut off at ``clip_radius``.
    """

    points: np.ndarray
    degenerate: bool
    clip_radius: float | None


def ellipsoid_boundary_points(Y, resolution: int, tol: Tolerances = DEFAULT_TOL) -> EllipsoidPoints:
    Y = symmetrize(as_matrix(Y, "Y"))
    m = Y.shape[0]
    if m not in (2, 3):
        raise DimensionError(f"ellipsoid points are only produced for m in (2, 3), got {m}")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    sf = spectral_split(Y, tol)
    V, lam, N = sf.range_basis, sf.diag_values, sf.null_basis
    r = lam.size
    if r == 0:
        # Y = 0 constrains nothing, so there is no boundary to draw
        return EllipsoidPoints(np.zeros((0, m)), True, None)
    axes = 1.0 / np.sqrt(lam)
    if r == m:
        return EllipsoidPoints(_ellipsoid(V, axes, resolution), False, None)

    radius = 10.0 * float(np.max(axes))
    ts = np.linspace(-radius, radius, resolution)
    if r == 1:
        # two parallel lines (m = 2) or planes (m = 3)
        pts = []
        for sign in (1.0, -1.0):
            centre = sign * axes[0] * V[:, 0]
            if m == 2:
                pts.extend(centre + t * N[:, 0] for t in ts)
            else:
                pts.extend(centre + a * N[:, 0] + b * N[:, 1] for a in ts for b in ts)
        return EllipsoidPoints(np.array(pts), True, radius)
    # m = 3, rank 2: an elliptic cylinder along the single null direction
    ring = _ellipsoid(V, axes, resolution)
    pts = [p + t * N[:, 0] for t in ts for p in ring]
    return EllipsoidPoints(np.array(pts), True, radius)


def _ellipsoid(V: np.ndarray, axes: np.ndarray, resolution: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(resolution) / resolution
    if axes.size == 2:
        unit = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    else:
        phi = np.pi * (np.arange(resolution) + 0.5) / resolution
        th, ph = np.meshgrid(theta, phi)
        unit = np.stack(
            [np.sin(ph) * np.cos(th), np.sin(ph) * np.sin(th), np.cos(ph)], axis=-1
        ).reshape(-1, 3)
    pts = (unit * axes) @ V.T
    pts[np.abs(pts) < 1e-15] = 0.0
    return pts
