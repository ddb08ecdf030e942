"""Brute-force checks that do not trust the solver.

These work from sampled admissible matrices and direct eigenvalue tests, and
build their own bases with scipy instead of reusing the solver's helpers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import DEFAULT_TOL, Tolerances, min_eig, symmetrize
from .problem import FusionProblem
from .structure import sample_admissible


@dataclass(frozen=True)
class ConsistencyVerdict:
    max_violation: float
    worst_sample_index: int
    samples_checked: int
    passed: bool


def check_consistency(
    problem: FusionProblem,
    K,
    B,
    samples: int = 1000,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    boundary_fraction: float = 0.7,
) -> ConsistencyVerdict:
    """Largest ``lambda_max(K (R + C P C^T) K^T - B)`` over sampled admissible ``P``."""
    K = np.asarray(K, dtype=float)
    B = symmetrize(np.asarray(B, dtype=float))
    bias = np.linalg.norm(K @ problem.H - np.eye(problem.n))
    if bias > tol.tol_check:
        raise ValueError(f"gain is not unbiased: ||KH - I|| = {bias:.3e}")
    Ps = sample_admissible(problem.info, samples, seed, boundary_fraction=boundary_fraction, tol=tol)
    KC = K @ problem.C
    base = K @ problem.R @ K.T - B
    if not Ps:
        worst = float(np.linalg.eigvalsh(symmetrize(base))[-1])
        return ConsistencyVerdict(worst, -1, 0, worst <= tol.tol_check)
    E = base + KC @ np.stack(Ps) @ KC.T
    top = np.linalg.eigvalsh((E + np.swapaxes(E, 1, 2)) / 2)[:, -1]
    idx = int(np.argmax(top))
    worst = float(top[idx])
    return ConsistencyVerdict(worst, idx, len(Ps), worst <= tol.tol_check)


def _psd_ok(X: np.ndarray, tol: Tolerances) -> bool:
    # absolute slack, widened for blocks with large entries
    scale = max(1.0, float(np.abs(X).max()) * 1e-6)
    return min_eig(X) >= -tol.tol_check * scale


def lmi_blocks(problem: FusionProblem, sol) -> list:
    n = problem.n
    blocks = [
        np.block([[sol.B, np.eye(n)], [np.eye(n), problem.G - sol.U]]),
        np.block([[sol.U, problem.L], [problem.L.T, sol.Y + problem.N]]),
    ]
    if sol.M is not None and sol.D is not None:
        blocks.append(np.block([[sol.M, sol.D], [sol.D.T, sol.Y]]))
    return [symmetrize(b) for b in blocks]


def check_lmi_certificates(problem: FusionProblem, sol, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Assemble the certificate blocks at ``(U, B, Y[, M])`` and test them.

    The weights are not looked at; see :func:`check_weights`.
    """
    return all(_psd_ok(b, tol) for b in lmi_blocks(problem, sol))


def check_weights(problem: FusionProblem, sol, tol: Tolerances = DEFAULT_TOL) -> bool:
    w = np.asarray(sol.omega, dtype=float)
    if w.size != problem.info.M or np.any(w < -tol.tol_check) or abs(w.sum() - 1.0) > tol.tol_check:
        return False
    Y = sum(wb * Yb for wb, Yb in zip(w, problem.info.inverse_bounds()))
    return bool(np.linalg.norm(Y - sol.Y) <= tol.tol_check * max(1.0, np.linalg.norm(Y)))


def check_prop2_identity(R, C, Y, tol: Tolerances = DEFAULT_TOL) -> float:
    """Frobenius gap between the two expressions for the optimal weighting matrix.

    Left side: ``R^{-1} - R^{-1} C (Y + C^T R^{-1} C)^+ C^T R^{-1}``.
    Right side: ``S (S^T (R + C Y^+ C^T) S)^{-1} S^T`` where the columns of
    ``S`` are an orthonormal basis of the orthogonal complement of
    ``col(C V_perp)`` and ``V_perp`` spans the kernel of ``Y``.
    """
    R = symmetrize(np.asarray(R, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    Y = symmetrize(np.asarray(Y, dtype=float))
    Ri = np.linalg.inv(R)
    lhs = Ri - Ri @ C @ np.linalg.pinv(Y + C.T @ Ri @ C, rcond=tol.tol_rank, hermitian=True) @ C.T @ Ri

    w, V = np.linalg.eigh(Y)
    top = max(np.abs(w).max(), 0.0) if w.size else 0.0
    Vperp = V[:, w <= tol.tol_rank * top] if top > 0 else np.eye(Y.shape[0])
    CV = C @ Vperp
    o = R.shape[0]
    if CV.size and np.linalg.norm(CV) > 0:
        S = sla.null_space(CV.T, rcond=tol.tol_rank)
    else:
        S = np.eye(o)
    if S.shape[1] == 0:
        rhs = np.zeros((o, o))
    else:
        Yp = np.linalg.pinv(Y, rcond=tol.tol_rank, hermitian=True)
        rhs = S @ np.linalg.inv(S.T @ (R + C @ Yp @ C.T) @ S) @ S.T
    return float(np.linalg.norm(symmetrize(lhs) - symmetrize(rhs)))


@dataclass
class SchurReport:
    checked: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.failures.values())

    def _tally(self, item: str, good: bool):
        self.checked[item] = self.checked.get(item, 0) + 1
        self.failures[item] = self.failures.get(item, 0) + (0 if good else 1)


def _rand_pd(rng, k):
    A = rng.standard_normal((k, k))
    return A @ A.T + 0.1 * np.eye(k)


def _rand_sym(rng, k):
    A = rng.standard_normal((k, k))
    return (A + A.T) / 2


def _psd(X, slack=1e-9):
    return min_eig(X) >= -slack * max(1.0, np.abs(X).max())


def _clear(X, margin=1e-6):
    """True when the sign of the smallest eigenvalue is unambiguous."""
    return abs(min_eig(X)) > margin * max(1.0, np.abs(X).max())


def check_prop1_schur(trials: int = 200, seed: int = 0) -> SchurReport:
    """Randomized checks of the five block-matrix definiteness facts.

    Items (i) and (ii) are equivalences and are exercised on both sides by
    mixing PSD and indefinite perturbations. Items (iii)-(v) are implications;
    samples where the premise fails are not counted.
    """
    rng = np.random.default_rng(seed)
    rep = SchurReport()
    for _ in range(trials):
        p, q = rng.integers(1, 4), rng.integers(1, 4)

        # (i) A > 0:  X >= 0  iff  C - B^T A^{-1} B >= 0
        A = _rand_pd(rng, p)
        Bm = rng.standard_normal((p, q))
        S = _rand_sym(rng, q) if rng.random() < 0.5 else _rand_pd(rng, q) * 0.1
        Cm = Bm.T @ np.linalg.solve(A, Bm) + S
        X = np.block([[A, Bm], [Bm.T, Cm]])
        if _clear(S):
            rep._tally("i", _psd(X) == _psd(S))

        # (ii) general A: X >= 0 iff A >= 0, col B in col A, C - B^T A^+ B >= 0
        r = rng.integers(0, p + 1)
        F = rng.standard_normal((p, r))
        A = F @ F.T
        inside = rng.random() < 0.7
        Bm = A @ rng.standard_normal((p, q)) if inside else rng.standard_normal((p, q))
        S = _rand_pd(rng, q) * 0.1 if rng.random() < 0.6 else _rand_sym(rng, q)
        Ap = np.linalg.pinv(A, hermitian=True) if r else np.zeros((p, p))
        Cm = Bm.T @ Ap @ Bm + S
        X = np.block([[A, Bm], [Bm.T, Cm]])
        Pa = A @ Ap
        col_ok = np.linalg.norm(Bm - Pa @ Bm) <= 1e-8 * max(1.0, np.linalg.norm(Bm))
        rhs = _psd(A) and col_ok and _psd(S)
        if _clear(S) and (col_ok or np.linalg.norm(Bm - Pa @ Bm) > 1e-3):
            if not col_ok:
                # X fails to be PSD, but only by a margin set by the leak; test directly
                rep._tally("ii", not _psd(X, 1e-12) and not rhs)
            else:
                rep._tally("ii", _psd(X) == rhs)

        # (iii) B = I, X >= 0  =>  A > 0, C > 0, A >= C^{-1}, A^{-1} <= C
        Cm = _rand_pd(rng, p)
        A = np.linalg.inv(Cm) + _rand_pd(rng, p) * rng.uniform(0, 1)
        X = np.block([[A, np.eye(p)], [np.eye(p), Cm]])
        if _psd(X):
            good = (
                min_eig(A) > 0
                and min_eig(Cm) > 0
                and _psd(A - np.linalg.inv(Cm))
                and _psd(Cm - np.linalg.inv(A))
            )
            rep._tally("iii", good)

        # (iv) B = I, A > 0, C > 0, (A >= C^{-1} or A^{-1} <= C)  =>  X >= 0
        Cm = _rand_pd(rng, p)
        A = np.linalg.inv(Cm) + _rand_sym(rng, p) * 0.05
        if min_eig(A) > 0 and (_psd(A - np.linalg.inv(Cm)) or _psd(Cm - np.linalg.inv(A))):
            X = np.block([[A, np.eye(p)], [np.eye(p), Cm]])
            rep._tally("iv", _psd(X))

        # (v) X > 0, X^{-1} >= blockdiag(Q, 0)  =>  A^{-1} >= Q  (Q is p x p)
        X = _rand_pd(rng, p + q)
        A = X[:p, :p]
        Ainv = np.linalg.inv(A)
        if rng.random() < 0.5:
            Q = Ainv - _rand_pd(rng, p) * rng.uniform(0, 0.1)
        else:
            Q = _rand_pd(rng, p) * rng.uniform(0, 0.5)
        if min_eig(Q) >= 0:
            Xi = np.linalg.inv(X)
            Qb = np.zeros((p + q, p + q))
            Qb[:p, :p] = Q
            if _psd(Xi - Qb):
                rep._tally("v", _psd(Ainv - Q))
    return rep
