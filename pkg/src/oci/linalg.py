"""Tolerance-aware dense symmetric linear algebra.

Every symmetric input is symmetrized as ``(A + A.T) / 2`` before use, so
round-off asymmetry never reaches the eigensolver. Rank and definiteness
decisions go through a single :class:`Tolerances` object so the cutoffs are
explicit and overridable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotPSDError


@dataclass(frozen=True)
class Tolerances:
    """Numerical cutoffs.

    tol_psd    absolute eigenvalue floor for accepting a matrix as PSD
               (applied relative to ``max(1, |lambda|_max)``)
    tol_pd     smallest eigenvalue accepted as strictly positive
    tol_rank   relative singular-value cutoff for rank and pseudo-inverse
    tol_solve  conic solver convergence tolerance
    tol_check  slack for post-hoc verification of matrix inequalities
    """

    tol_psd: float = 1e-9
    tol_pd: float = 1e-12
    tol_rank: float = 1e-9
    tol_solve: float = 1e-9
    tol_check: float = 1e-6

    def __post_init__(self):
        for name in ("tol_psd", "tol_pd", "tol_rank", "tol_solve", "tol_check"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.tol_check < self.tol_solve:
            raise ValueError("tol_check must be >= tol_solve")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class SpectralFactorization:
    """``A = V diag(D) V^T`` with ``[V V_perp]`` orthonormal."""

    range_basis: np.ndarray
    null_basis: np.ndarray
    diag_values: np.ndarray

    @property
    def rank(self) -> int:
        return self.diag_values.size

    def reconstruct(self) -> np.ndarray:
        V = self.range_basis
        return (V * self.diag_values) @ V.T


@dataclass(frozen=True)
class RankInfo:
    """Numerical rank plus how far the decision sits from the cutoff.

    ``margin`` is the smaller of (smallest kept singular value / cutoff) and
    (cutoff / largest dropped singular value); it is ``inf`` when neither side
    has a competitor. Values near 1 mean the verdict is fragile.
    """

    rank: int
    margin: float
    cutoff: float


def symmetrize(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return (A + A.T) / 2.0


def as_matrix(A, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-D float array (1-D input is read as a column)."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _psd_floor(eigs, tol: Tolerances) -> float:
    scale = max(1.0, float(np.max(np.abs(eigs))) if eigs.size else 1.0)
    return -tol.tol_psd * scale


def is_psd(A, tol: Tolerances = DEFAULT_TOL) -> bool:
    eigs = np.linalg.eigvalsh(symmetrize(A))
    return bool(eigs[0] >= _psd_floor(eigs, tol))


def is_pd(A, tol: Tolerances = DEFAULT_TOL) -> bool:
    eigs = np.linalg.eigvalsh(symmetrize(A))
    return bool(eigs[0] > tol.tol_pd * max(1.0, abs(eigs[-1])))


def as_psd(A, tol: Tolerances = DEFAULT_TOL, definite=False, name="matrix") -> np.ndarray:
    """Return the symmetrized matrix, raising :class:`NotPSDError` if it is not
    positive semidefinite (or definite, with ``definite=True``)."""
    S = symmetrize(as_matrix(A, name))
    eigs = np.linalg.eigvalsh(S)
    if definite:
        if not eigs[0] > tol.tol_pd * max(1.0, abs(eigs[-1])):
            raise NotPSDError(f"{name} is not positive definite (min eigenvalue {eigs[0]:.3e})")
    elif eigs[0] < _psd_floor(eigs, tol):
        raise NotPSDError(f"{name} is not positive semidefinite (min eigenvalue {eigs[0]:.3e})")
    return S


def pinv(A, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via eigendecomposition.

    Eigenvalues with magnitude at most ``tol_rank * max|lambda|`` are treated
    as zero. The result is exactly symmetric.
    """
    S = symmetrize(A)
    w, V = np.linalg.eigh(S)
    if w.size == 0:
        return S.copy()
    cutoff = tol.tol_rank * np.max(np.abs(w))
    keep = np.abs(w) > cutoff
    if not np.any(keep):
        return np.zeros_like(S)
    Vk = V[:, keep]
    out = (Vk / w[keep]) @ Vk.T
    return (out + out.T) / 2.0


def spectral_split(A, tol: Tolerances = DEFAULT_TOL) -> SpectralFactorization:
    """Split a PSD matrix into range and null-space orthonormal bases."""
    S = symmetrize(A)
    w, V = np.linalg.eigh(S)
    if w.size and w[0] < _psd_floor(w, tol):
        raise NotPSDError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    top = np.max(np.abs(w)) if w.size else 0.0
    keep = w > tol.tol_rank * top if top > 0 else np.zeros(w.shape, dtype=bool)
    # eigh sorts ascending; present the range basis largest-first
    idx = np.flatnonzero(keep)[::-1]
    return SpectralFactorization(
        range_basis=V[:, idx],
        null_basis=V[:, ~keep],
        diag_values=w[idx],
    )


def rank_info(A, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> RankInfo:
    """Rank with its margin.

    ``scale`` sets a floor for the reference magnitude. Pass the size of the
    inputs a matrix was computed from when it is a difference of larger terms,
    so that pure round-off is not mistaken for full rank.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return RankInfo(0, np.inf, 0.0)
    s = np.linalg.svd(np.atleast_2d(A), compute_uv=False)
    smax = max(s[0] if s.size else 0.0, scale)
    if smax == 0.0:
        return RankInfo(0, np.inf, 0.0)
    cutoff = tol.tol_rank * smax
    kept = s[s > cutoff]
    dropped = s[s <= cutoff]
    keep_ratio = kept[-1] / cutoff if kept.size else np.inf
    drop_ratio = cutoff / dropped[0] if dropped.size and dropped[0] > 0 else np.inf
    return RankInfo(int(kept.size), float(min(keep_ratio, drop_ratio)), float(cutoff))


def rank_tol(A, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol_rank * sigma_max``."""
    return rank_info(A, tol).rank


def orth(A, tol: Tolerances = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis for the column space of ``A``.

    As in :func:`rank_info`, ``scale`` raises the cutoff reference for
    matrices that may consist entirely of round-off.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((A.shape[0], 0))
    return U[:, s > tol.tol_rank * max(s[0], scale)]


def orth_complement(Q: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the orthogonal complement of ``col(Q)``.

    ``Q`` must already have orthonormal columns.
    """
    n, k = Q.shape
    if k == 0:
        return np.eye(n)
    if k == n:
        return np.zeros((n, 0))
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    return U[:, k:]


def min_eig(A) -> float:
    return float(np.linalg.eigvalsh(symmetrize(A))[0])


def max_eig(A) -> float:
    return float(np.linalg.eigvalsh(symmetrize(A))[-1])


def check_psd_order(A, B, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff ``A - B`` has smallest eigenvalue >= ``-tol_check``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    return min_eig(A - B) >= -tol.tol_check


def inv_pd(A) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix, symmetrized."""
    S = symmetrize(A)
    L = np.linalg.cholesky(S)
    Linv = np.linalg.solve(L, np.eye(S.shape[0]))
    return Linv.T @ Linv


def sqrtm_psd(A) -> np.ndarray:
    w, V = np.linalg.eigh(symmetrize(A))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def inv_sqrtm_pd(A) -> np.ndarray:
    w, V = np.linalg.eigh(symmetrize(A))
    return (V / np.sqrt(w)) @ V.T


def random_psd(rng: np.random.Generator, n: int, rank=None, scale=1.0) -> np.ndarray:
    """Random PSD matrix of the given rank (full rank by default)."""
    r = n if rank is None else rank
    G = rng.standard_normal((n, r))
    return scale * (G @ G.T) / max(r, 1)


def random_pd(rng: np.random.Generator, n: int, floor=0.1, scale=1.0) -> np.ndarray:
    return random_psd(rng, n, scale=scale) + floor * scale * np.eye(n)
