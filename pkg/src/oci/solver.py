"""Kahan-family optimal fusion: SDP encoding, solve, gain recovery.

The conic solver is only trusted to pick the Kahan weights. Everything that a
caller relies on (``K``, ``B``, ``U``, ``M``) is recomputed in closed form from
the cleaned weights, so unbiasedness and consistency hold to round-off rather
than to solver accuracy. The raw solver iterate is kept in ``diagnostics``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .conic import ConicProgram, Cone, ProgramBuilder, solve_clarabel
from .errors import InfeasibleError, NoProjectionBoundError, NotPSDError, NumericalTroubleError
from .feasibility import analyze, cpc_bounded
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_matrix,
    inv_pd,
    orth,
    orth_complement,
    pinv,
    rank_info,
    spectral_split,
    symmetrize,
)
from .problem import FusionProblem, Objective, ProjectionBoundRequest
from .structure import aggregate_inverse_bound, clean_weights


@dataclass(frozen=True)
class FusionSolution:
    K: np.ndarray
    B: np.ndarray
    omega: np.ndarray
    Y: np.ndarray
    U: np.ndarray
    objective_value: float
    objective: Objective = Objective.TRACE
    M: np.ndarray | None = None
    D: np.ndarray | None = None
    gamma: float | None = None
    solver_status: str = "Optimal"
    diagnostics: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# closed-form pieces


def phi_direct(R, C, Y, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``R^{-1} - R^{-1} C (Y + C^T R^{-1} C)^+ C^T R^{-1}``."""
    Ri = inv_pd(R)
    RiC = Ri @ C
    return symmetrize(Ri - RiC @ pinv(Y + C.T @ RiC, tol) @ RiC.T)


def phi_projected(R, C, Y, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Same matrix as :func:`phi_direct`, computed as ``S (S^T (R + C Y^+ C^T) S)^{-1} S^T``.

    ``S`` spans the orthogonal complement of ``C`` applied to the kernel of
    ``Y``. This form never adds a large ``C^T R^{-1} C`` to ``Y``, so it stays
    accurate when ``R`` is tiny.
    """
    R = np.asarray(R, dtype=float)
    C = np.asarray(C, dtype=float)
    sf = spectral_split(Y, tol)
    o = R.shape[0]
    if sf.null_basis.shape[1]:
        # C V_perp is pure round-off when the kernel of Y lies in the kernel of C
        S = orth_complement(orth(C @ sf.null_basis, tol, scale=np.linalg.norm(C, 2)))
    else:
        S = np.eye(o)
    if S.shape[1] == 0:
        return np.zeros((o, o))
    V = sf.range_basis
    Ypinv = (V / sf.diag_values) @ V.T
    inner = symmetrize(S.T @ (R + C @ Ypinv @ C.T) @ S)
    return symmetrize(S @ inv_pd(inner) @ S.T)


def _information(problem: FusionProblem, Y: np.ndarray, tol: Tolerances):
    """``(H^T Phi H, H^T Phi)`` for the Kahan bound ``Y``."""
    Phi = phi_projected(problem.R, problem.C, Y, tol)
    HtPhi = problem.H.T @ Phi
    return symmetrize(HtPhi @ problem.H), HtPhi


def _invert_information(F: np.ndarray, tol: Tolerances, scale: float) -> np.ndarray | None:
    """``F^{-1}``, or None when ``F`` is singular relative to ``scale``.

    ``F = G - U`` is a difference, so its rank is judged against ``|G|``.
    """
    ri = rank_info(F, tol, scale=scale)
    if ri.rank < F.shape[0]:
        return None
    try:
        return inv_pd(F)
    except np.linalg.LinAlgError:
        return None


def _gscale(problem: FusionProblem) -> float:
    return float(np.linalg.norm(problem.G, 2))


def recover_gain(problem: FusionProblem, Y, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Unbiased gain that is optimal for the single inverse bound ``Y``."""
    Y = symmetrize(as_matrix(Y, "Y"))
    F, HtPhi = _information(problem, Y, tol)
    Finv = _invert_information(F, tol, _gscale(problem))
    if Finv is None:
        raise InfeasibleError("no finite bound exists for this Kahan ellipsoid", reason="gain_singular")
    return Finv @ HtPhi


def reconstruct_from_gain(problem: FusionProblem, K, B, tol: Tolerances = DEFAULT_TOL):
    """Map a consistent pair ``(K, B)`` to a certificate ``(Y, U, B')`` with ``J(B') <= J(B)``."""
    K = as_matrix(K, "K")
    B = symmetrize(as_matrix(B, "B"))
    if K.shape != (problem.n, problem.o) or B.shape != (problem.n, problem.n):
        raise ValueError("K or B has the wrong shape")
    gap = symmetrize(B - K @ problem.R @ K.T)
    if np.linalg.eigvalsh(gap)[0] < -tol.tol_check * max(1.0, np.abs(B).max()):
        raise NotPSDError("B - K R K^T is not positive semidefinite")
    KC = K @ problem.C
    if np.linalg.norm(KC) <= tol.tol_rank * np.linalg.norm(K) * np.linalg.norm(problem.C):
        KC = np.zeros_like(KC)
    # factored as A^T A so round-off cannot make Y indefinite
    w, V = np.linalg.eigh(gap)
    keep = w > tol.tol_rank * max(float(np.max(np.abs(w))), 0.0)
    A = (V[:, keep] / np.sqrt(w[keep])).T @ KC
    Y = symmetrize(A.T @ A)
    F, _ = _information(problem, Y, tol)
    Finv = _invert_information(F, tol, _gscale(problem))
    if Finv is None:
        raise InfeasibleError("reconstructed bound is not invertible", reason="gain_singular")
    U = symmetrize(problem.G - F)
    return Y, U, Finv


# ---------------------------------------------------------------------------
# encoding


def default_gamma(problem: FusionProblem, req: ProjectionBoundRequest, obj: Objective, tol=DEFAULT_TOL) -> float:
    """A weight small enough that the bound objective dominates."""
    if req.kind is Objective.LOGDET:
        return 1e-6
    if obj is Objective.LOGDET:
        num = 1.0
    else:
        num = float(np.trace(pinv(problem.G, tol)))
    Yagg = aggregate_inverse_bound(problem.info)
    den = float(np.trace(req.D @ pinv(Yagg, tol) @ req.D.T))
    return 1e-6 * num / den if den > 0 else 1e-6 * num


def encode_sdp(
    problem: FusionProblem,
    obj: Objective = Objective.TRACE,
    req: ProjectionBoundRequest | None = None,
    gamma: float | None = None,
    phase_one: bool = False,
    precondition: bool = True,
) -> ConicProgram:
    """Standard-form conic program for the Kahan-family problem.

    ``phase_one=True`` drops the objective and instead maximizes the smallest
    eigenvalue of ``G - U``; that program is always strictly feasible and is
    used to tell infeasible instances apart from solver trouble.

    With ``precondition=True`` (the default) the variable ``U`` is replaced by
    ``U - L N^+ L^T`` and the second block is transformed by an invertible
    congruence, see :func:`preconditioner`. The feasible set is unchanged but
    the large entries that appear when ``R`` is small cancel analytically
    instead of inside the solver. The state coordinates are also changed by
    ``T = G^{-1/2}`` so the information block is O(1); the trace objective
    then carries the weight ``G^{-1}``. ``prog.meta`` records how to map the
    solver's ``U`` and ``B`` back.
    """
    obj = Objective.parse(obj)
    n, m = problem.n, problem.m
    info = problem.info
    Ys = info.inverse_bounds()
    G, L, N = problem.G, problem.L, problem.N
    T = np.eye(n)
    Wobj = np.eye(n)
    offset = 0.0
    if precondition:
        G0, A, Sc = preconditioner(problem)
        w, V = np.linalg.eigh(problem.G)
        if w[0] > 0:
            T = (V / np.sqrt(w)) @ V.T
            Wobj = (V / w) @ V.T
            offset = float(np.sum(np.log(w)))
        G = symmetrize(T @ G0 @ T)
        A = T @ A
        L = None
    if req is not None and gamma is None:
        gamma = default_gamma(problem, req, obj)

    pb = ProgramBuilder()
    pb.add_sym("U", n)
    if phase_one:
        pb.add_vec("tau", 1)
    elif obj is Objective.TRACE:
        pb.add_sym("B", n)
    else:
        pb.add_lower("Z", n)
        pb.add_vec("t", n)
    if req is not None and not phase_one:
        d = req.d
        if req.kind is Objective.TRACE:
            pb.add_sym("M", d)
        else:
            pb.add_sym("Minv", d)
            pb.add_lower("Z2", d)
            pb.add_vec("t2", d)
    pb.add_vec("omega", info.M)

    c = pb.objective()
    if phase_one:
        c[pb.index("tau", 0)] = -1.0
    elif obj is Objective.TRACE:
        for j in range(n):
            for i in range(j + 1):
                c[pb.index("B", i, j)] = Wobj[i, j] if i == j else 2.0 * Wobj[i, j]
    else:
        for i in range(n):
            c[pb.index("t", i)] = -1.0
        # -logdet(G - U) = -logdet(T (G - U) T) - logdet(G)
        pb.objective_offset = -offset
    if req is not None and not phase_one:
        if req.kind is Objective.TRACE:
            for i in range(req.d):
                c[pb.index("M", i, i)] = gamma
        else:
            for i in range(req.d):
                c[pb.index("t2", i)] = -gamma

    # first block: bound vs. information
    if phase_one:
        lmi = pb.lmi(n).const(0, 0, G).sym_var(0, "U", -1.0)
        tau = pb.index("tau", 0)
        for i in range(n):
            lmi.entry(i, i, tau, -1.0)
        lmi.commit()
        # cap tau so the program stays bounded
        row = np.zeros((1, pb.nv))
        row[0, tau] = 1.0
        pb.add_rows(row, [float(np.linalg.eigvalsh(G)[-1]) + 1.0], Cone("nonneg", 1))
    elif obj is Objective.TRACE:
        pb.lmi(2 * n).sym_var(0, "B").const(0, n, np.eye(n)).const(n, n, G).sym_var(n, "U", -1.0).commit()
    else:
        _logdet_block(pb, n, "Z", "t", lambda l: l.const(0, 0, G).sym_var(0, "U", -1.0))

    # second block: correlation certificate
    lmi = pb.lmi(n + m).sym_var(0, "U")
    if precondition:
        lmi.const(n, n, Sc @ N @ Sc)
        for b, Yb in enumerate(Ys):
            j = pb.index("omega", b)
            lmi.scaled(0, 0, j, A @ Yb @ A.T).scaled(0, n, j, -(A @ Yb @ Sc)).scaled(n, n, j, Sc @ Yb @ Sc)
    else:
        lmi.const(0, n, L).const(n, n, N)
        for b, Yb in enumerate(Ys):
            lmi.scaled(n, n, pb.index("omega", b), Yb)
    lmi.commit()

    # optional projection bound
    if req is not None and not phase_one:
        D = req.D
        d = req.d
        if req.kind is Objective.TRACE:
            lmi = pb.lmi(d + m).sym_var(0, "M").const(0, d, D)
            for b, Yb in enumerate(Ys):
                lmi.scaled(d, d, pb.index("omega", b), Yb)
            lmi.commit()
        else:
            # Y - D^T Minv D >= 0 is linear in Minv = M^{-1}
            lmi = pb.lmi(m)
            for b, Yb in enumerate(Ys):
                lmi.scaled(0, 0, pb.index("omega", b), Yb)
            for j in range(d):
                for i in range(j + 1):
                    E = np.zeros((d, d))
                    E[i, j] = E[j, i] = 1.0
                    lmi.scaled(0, 0, pb.index("Minv", i, j), -(D.T @ E @ D))
            lmi.commit()
            _logdet_block(pb, d, "Z2", "t2", lambda l: l.sym_var(0, "Minv"))

    # simplex
    row = np.zeros((1, pb.nv))
    w0 = pb.index("omega", 0)
    row[0, w0 : w0 + info.M] = 1.0
    pb.add_rows(row, [1.0], Cone("zero", 1))
    A = np.zeros((info.M, pb.nv))
    A[:, w0 : w0 + info.M] = -np.eye(info.M)
    pb.add_rows(A, np.zeros(info.M), Cone("nonneg", info.M))
    prog = pb.build()
    prog.meta = {"precondition": precondition, "T": T}
    return prog


def _raw_certificate(problem: FusionProblem, prog: ConicProgram, x: np.ndarray, obj: Objective):
    """Map the solver's ``U`` (and ``B``) back to the original coordinates."""
    U = prog.extract(x, "U")
    B = prog.extract(x, "B") if obj is Objective.TRACE else None
    if prog.meta.get("precondition"):
        T = prog.meta["T"]
        Ti = np.linalg.inv(T)
        _, A, _ = preconditioner(problem)
        U = Ti @ U @ Ti + A @ problem.N @ A.T
        if B is not None:
            B = T @ B @ T
    return symmetrize(U), None if B is None else symmetrize(B)


def preconditioner(problem: FusionProblem, tol: Tolerances = DEFAULT_TOL):
    """Data for the shifted, rescaled form of the certificate block.

    Returns ``(G0, A, Sc)`` with ``A = L N^+``, ``G0 = G - A N A^T`` and
    ``Sc = (N + nu I)^{-1/2}``. With ``U = A N A^T + Ushift`` the congruence
    ``[[I, -A], [0, Sc]]`` maps ``[[U, L], [L^T, Y + N]]`` to
    ``[[Ushift + A Y A^T, -A Y Sc], [-Sc Y A^T, Sc (Y + N) Sc]]``.
    ``G0`` and ``A`` are formed from ``R^{-1/2} H`` and ``R^{-1/2} C`` so no
    large quantities are subtracted.
    """
    Rih = np.linalg.cholesky(problem.R)
    Hs = np.linalg.solve(Rih, problem.H)
    Cs = np.linalg.solve(Rih, problem.C)
    Q = orth(Cs, tol)
    Hp = Hs - Q @ (Q.T @ Hs)
    G0 = symmetrize(Hp.T @ Hp)
    # minimum-norm least squares keeps A inside the row space of C
    A = np.linalg.lstsq(Cs, Hs, rcond=tol.tol_rank)[0].T
    Yscale = max(1e-300, float(np.linalg.eigvalsh(aggregate_inverse_bound(problem.info))[-1]))
    w, V = np.linalg.eigh(problem.N)
    w = np.clip(w, 0.0, None) + Yscale
    Sc = (V / np.sqrt(w)) @ V.T
    return G0, A, symmetrize(Sc)


def _logdet_block(pb: ProgramBuilder, k: int, zname: str, tname: str, fill):
    """``t_i <= log Z_ii`` and ``[[X, Z], [Z^T, diag(Z)]] >= 0`` so ``sum t <= logdet X``."""
    lmi = pb.lmi(2 * k)
    fill(lmi)
    for i in range(k):
        for j in range(i + 1):
            lmi.entry(i, k + j, pb.index(zname, i, j))
        lmi.entry(k + i, k + i, pb.index(zname, i, i))
    lmi.commit()
    for i in range(k):
        A = np.zeros((3, pb.nv))
        A[0, pb.index(tname, i)] = -1.0
        A[2, pb.index(zname, i, i)] = -1.0
        pb.add_rows(A, [0.0, 1.0, 0.0], Cone("exp", 1))


# ---------------------------------------------------------------------------
# solving


def _weight_candidates(raw: np.ndarray, tol: Tolerances):
    """Simplex points to try, in order, when turning solver weights into a solution.

    First the cleaned weights, then the clipped raw weights, then versions with
    small weights raised to a floor. The floors matter when the optimum is
    only approached as a weight goes to zero: any positive weight gives a
    valid bound, but a weight of 1e-10 is lost to round-off.
    """
    raw = np.asarray(raw, dtype=float)
    out = []

    def push(w):
        if not any(np.array_equal(w, s) for s in out):
            out.append(w)

    try:
        push(clean_weights(raw, tol))
    except ValueError:
        pass
    clipped = np.clip(raw, 0.0, None)
    if clipped.sum() <= 0:
        return out
    clipped = clipped / clipped.sum()
    push(clipped)
    if raw.size > 1:
        for floor in (1e-8, 1e-6, 1e-4):
            w = np.maximum(clipped, floor)
            push(w / w.sum())
    return out


def _polish(problem: FusionProblem, obj: Objective, omega: np.ndarray, req, gamma, tol: Tolerances):
    info = problem.info
    Y = np.zeros((problem.m, problem.m))
    for wb, Yb in zip(omega, info.inverse_bounds()):
        if wb > 0:
            Y += wb * Yb
    Y = symmetrize(Y)
    F, HtPhi = _information(problem, Y, tol)
    B = _invert_information(F, tol, _gscale(problem))
    if B is None:
        return None
    K = B @ HtPhi
    U = symmetrize(problem.G - F)
    M = None
    if req is not None:
        sf = spectral_split(Y, tol)
        D = req.D
        if sf.null_basis.shape[1]:
            leak = np.linalg.norm(D @ sf.null_basis)
            if leak > tol.tol_rank * max(1.0, np.linalg.norm(D)) * 1e3:
                return None
        V = sf.range_basis
        M = symmetrize(D @ ((V / sf.diag_values) @ V.T) @ D.T)
    if obj is Objective.TRACE:
        value = float(np.trace(B))
    else:
        value = float(np.linalg.slogdet(B)[1])
    if M is not None:
        if req.kind is Objective.TRACE:
            value += gamma * float(np.trace(M))
        else:
            sign, ld = np.linalg.slogdet(M)
            value += gamma * ld if sign > 0 else np.inf
    return K, B, Y, U, M, value


def _phase_one(problem: FusionProblem, tol: Tolerances):
    """Decide whether some Kahan weights give an invertible information matrix."""
    prog = encode_sdp(problem, phase_one=True)
    res = solve_clarabel(prog, tol.tol_solve)
    diag = {"phase_one": res.diagnostics}
    if not res.usable:
        return None, diag
    omega = prog.extract(res.x, "omega")
    diag["phase_one_tau"] = float(prog.extract(res.x, "tau")[0])
    for w in _weight_candidates(omega, tol):
        Y = symmetrize(sum(wb * Yb for wb, Yb in zip(w, problem.info.inverse_bounds())))
        F, _ = _information(problem, Y, tol)
        if rank_info(F, tol, scale=_gscale(problem)).rank == problem.n:
            return True, diag
    return False, diag


def sdp_feasibility(problem: FusionProblem, tol: Tolerances = DEFAULT_TOL) -> bool | None:
    """Feasibility as decided by the conic solver alone; ``None`` if it failed."""
    return _phase_one(problem, tol)[0]


def solve_kahan_oci(
    problem: FusionProblem,
    obj: Objective | str = Objective.TRACE,
    tol: Tolerances = DEFAULT_TOL,
    req: ProjectionBoundRequest | None = None,
) -> FusionSolution:
    obj = Objective.parse(obj)
    report = analyze(problem, tol)
    if not report.H_full_rank:
        raise InfeasibleError("H does not have full column rank", reason="H_rank",
                              diagnostics={"report": report})
    gamma = None
    if req is not None:
        if req.D.shape[1] != problem.m:
            raise ValueError(f"D has {req.D.shape[1]} columns, expected {problem.m}")
        if not cpc_bounded(problem.info, req.D, tol):
            raise NoProjectionBoundError("the rows of D are not covered by the bounds")
        gamma = req.gamma if req.gamma is not None else default_gamma(problem, req, obj, tol)

    diagnostics = {"feasibility": report}
    polished = None
    res = prog = None
    if problem.info.M == 1:
        # the simplex is a single point, nothing to optimize
        raw = np.ones(1)
        diagnostics["solver"] = {"status": "Skipped"}
        polished = _best_polish(problem, obj, raw, req, gamma, tol, diagnostics)
    else:
        attempts = []
        # a second encoding and a looser tolerance are tried before giving up
        for precondition, tol_solve in ((True, tol.tol_solve), (False, tol.tol_solve), (True, 1e2 * tol.tol_solve)):
            prog = encode_sdp(problem, obj, req, gamma, precondition=precondition)
            res = solve_clarabel(prog, tol_solve)
            attempts.append(res)
            diagnostics.setdefault("attempts", []).append(res.diagnostics)
            diagnostics["solver"] = res.diagnostics
            diagnostics["solve_time"] = diagnostics.get("solve_time", 0.0) + res.solve_time
            if not res.usable:
                continue
            raw = prog.extract(res.x, "omega")
            diagnostics["raw_omega"] = raw
            diagnostics["raw_U"], diagnostics["raw_B"] = _raw_certificate(problem, prog, res.x, obj)
            polished = _best_polish(problem, obj, raw, req, gamma, tol, diagnostics)
            if polished is not None:
                break
        if polished is None and report.oci_feasible:
            starts = [prog.extract(a.x, "omega") for a in attempts if np.all(np.isfinite(a.x))]
            polished = _direct_search(problem, obj, starts, req, gamma, tol, diagnostics)

    if polished is None:
        sdp_feasible, extra = _phase_one(problem, tol)
        diagnostics.update(extra)
        if sdp_feasible is None:
            raise NumericalTroubleError("conic solver failed on the feasibility check", diagnostics)
        if sdp_feasible != report.oci_feasible:
            raise NumericalTroubleError(
                "conic solver and the exact rank test disagree on feasibility", diagnostics
            )
        if not sdp_feasible:
            raise InfeasibleError(
                "no unbiased gain has a finite consistent bound",
                reason=report.reason or "condition_rank",
                diagnostics=diagnostics,
            )
        status = diagnostics["solver"]["status"]
        raise NumericalTroubleError(f"conic solver returned {status} on a feasible problem", diagnostics)

    if not report.oci_feasible:
        raise NumericalTroubleError(
            "conic solver found a bound although the exact rank test says none exists", diagnostics
        )

    w, (K, B, Y, U, M, value) = polished
    if "direct_search" in diagnostics:
        # no converged dual, so no certified gap
        diagnostics["optimality_gap"] = None
    elif res is not None:
        diagnostics["solver_objective"] = res.objective
        # the dual objective bounds the optimum from below when the solve converged
        dual = res.diagnostics["dual_objective"] + prog.objective_offset
        diagnostics["optimality_gap"] = value - dual
    else:
        diagnostics["optimality_gap"] = 0.0
    return FusionSolution(
        K=K, B=B, omega=w, Y=Y, U=U, objective_value=value, objective=obj,
        M=M, D=None if req is None else req.D, gamma=gamma, solver_status="Optimal", diagnostics=diagnostics,
    )


def _best_polish(problem, obj, raw, req, gamma, tol, diagnostics):
    best = None
    for i, w in enumerate(_weight_candidates(raw, tol)):
        out = _polish(problem, obj, w, req, gamma, tol)
        if out is None:
            continue
        if best is None or out[-1] < best[1][-1] - 1e-12 * abs(out[-1]):
            best = (w, out)
            diagnostics["weight_candidate"] = i
    return best


def _direct_search(problem, obj, starts, req, gamma, tol, diagnostics):
    """Minimize the closed-form objective over the simplex without the conic solver.

    Used when every conic attempt stalls, typically when the optimum sits on a
    face of the simplex and the data are badly scaled. Both objectives are
    convex in the weights, so a local method from the best start is enough.
    """
    M = problem.info.M
    pts = [np.clip(w, 0.0, None) / max(np.clip(w, 0.0, None).sum(), 1e-300) for w in starts]
    pts += list(np.eye(M)) + [np.full(M, 1.0 / M)]
    scored = []
    for w in pts:
        out = _polish(problem, obj, w, req, gamma, tol)
        if out is not None and np.isfinite(out[-1]):
            scored.append((out[-1], w))
    if not scored:
        return None
    v0, w0 = min(scored, key=lambda t: t[0])
    penalty = abs(v0) * 1e3 + 1e3

    def f(w):
        out = _polish(problem, obj, np.clip(w, 0.0, None), req, gamma, tol)
        return out[-1] if out is not None and np.isfinite(out[-1]) else penalty

    res = minimize(
        f, w0, method="SLSQP", bounds=[(0.0, 1.0)] * M,
        constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0}],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    diagnostics["direct_search"] = {"start_value": float(v0), "iterations": int(res.nit), "message": str(res.message)}
    best = _best_polish(problem, obj, res.x, req, gamma, tol, diagnostics)
    start = _polish(problem, obj, w0, req, gamma, tol)
    if best is None or start[-1] < best[1][-1]:
        best = (w0, start)
    return best


def solve_with_projection_bound(
    problem: FusionProblem,
    obj: Objective | str,
    req: ProjectionBoundRequest,
    tol: Tolerances = DEFAULT_TOL,
) -> FusionSolution:
    return solve_kahan_oci(problem, obj, tol, req)
