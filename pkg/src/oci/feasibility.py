"""Rank tests deciding whether a fusion problem has a finite consistent bound."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import DEFAULT_TOL, RankInfo, Tolerances, as_matrix, pinv, rank_info, symmetrize
from .problem import FusionProblem
from .structure import InfoStructure, stacked_W

# a rank verdict whose margin is below this factor is reported as borderline
BORDERLINE_FACTOR = 10.0


@dataclass(frozen=True)
class FeasibilityReport:
    p_bounded: bool
    cpc_bounded: bool
    sufficient_feasible: bool
    oci_feasible: bool
    H_full_rank: bool = True
    rank_margins: dict = field(default_factory=dict)
    borderline: frozenset = frozenset()
    reason: str | None = None

    @property
    def is_borderline(self) -> bool:
        return bool(self.borderline)


def _stack_rank_pair(W: np.ndarray, C: np.ndarray, tol: Tolerances) -> tuple[RankInfo, RankInfo]:
    """Ranks of ``W`` and ``[W; C]``, with ``C`` rescaled to the size of ``W``.

    Rescaling leaves the exact rank of the stack unchanged but keeps a very
    large ``C`` from swamping the relative cutoff.
    """
    rW = rank_info(W, tol)
    cn = np.linalg.norm(C, 2) if C.size else 0.0
    if cn > 0:
        C = C * (np.linalg.norm(W, 2) / cn)
    rS = rank_info(np.vstack([W, C]), tol)
    return rW, rS


def p_bounded(info: InfoStructure, tol: Tolerances = DEFAULT_TOL) -> bool:
    return rank_info(stacked_W(info), tol).rank == info.m


def cpc_bounded(info: InfoStructure, C, tol: Tolerances = DEFAULT_TOL) -> bool:
    C = as_matrix(C, "C")
    if C.shape[1] != info.m:
        raise DimensionError(f"C has {C.shape[1]} columns, expected {info.m}")
    W = stacked_W(info)
    if rank_info(W, tol).rank == info.m:
        return True
    rW, rS = _stack_rank_pair(W, C, tol)
    return rW.rank == rS.rank


def condition_matrix(problem: FusionProblem, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``G - L (W^T W + N)^+ L^T``; the problem is feasible iff it is nonsingular."""
    W = stacked_W(problem.info)
    inner = pinv(W.T @ W + problem.N, tol)
    return symmetrize(problem.G - problem.L @ inner @ problem.L.T)


def oci_feasible(problem: FusionProblem, tol: Tolerances = DEFAULT_TOL) -> bool:
    return analyze(problem, tol).oci_feasible


def analyze(problem: FusionProblem, tol: Tolerances = DEFAULT_TOL) -> FeasibilityReport:
    info = problem.info
    W = stacked_W(info)
    margins = {}
    borderline = set()

    def note(name, ri: RankInfo):
        margins[name] = ri.margin
        if ri.margin < BORDERLINE_FACTOR:
            borderline.add(name)

    h = rank_info(problem.H, tol)
    note("H", h)
    H_ok = h.rank == problem.n

    rW, rS = _stack_rank_pair(W, problem.C, tol)
    note("W", rW)
    note("W_C", rS)
    pb = rW.rank == info.m
    cb = pb or rW.rank == rS.rank
    sufficient = H_ok and cb

    if not H_ok:
        return FeasibilityReport(
            p_bounded=pb,
            cpc_bounded=cb,
            sufficient_feasible=False,
            oci_feasible=False,
            H_full_rank=False,
            rank_margins=margins,
            borderline=frozenset(borderline),
            reason="H_rank",
        )

    G_scale = float(np.linalg.norm(problem.G, 2))
    rc = rank_info(condition_matrix(problem, tol), tol, scale=G_scale)
    note("condition", rc)
    feasible = rc.rank == problem.n
    if sufficient and not feasible:
        # the rank-equality test is itself a proof of feasibility; a numerical
        # disagreement means the condition matrix is ill-conditioned
        borderline.add("condition")
        feasible = True
    return FeasibilityReport(
        p_bounded=pb,
        cpc_bounded=cb,
        sufficient_feasible=sufficient,
        oci_feasible=feasible,
        H_full_rank=True,
        rank_margins=margins,
        borderline=frozenset(borderline),
        reason=None if feasible else "condition_rank",
    )
