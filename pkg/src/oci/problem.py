"""Problem data for optimal-correlation-informed fusion."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError
from .linalg import DEFAULT_TOL, Tolerances, as_matrix, as_psd, inv_pd, rank_tol, symmetrize
from .structure import InfoStructure


class Objective(str, enum.Enum):
    TRACE = "trace"
    LOGDET = "logdet"

    @classmethod
    def parse(cls, value) -> "Objective":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown objective {value!r}; expected 'trace' or 'logdet'") from None


@dataclass(frozen=True)
class FusionProblem:
    """Fuse ``z = H x + e`` where ``E[e e^T] = R + C P C^T`` and ``P`` is only
    known through ``info``.

    ``H`` is not required to have full column rank here; the feasibility
    module reports that case with its own reason code.
    """

    H: np.ndarray
    R: np.ndarray
    C: np.ndarray
    info: InfoStructure
    tol: Tolerances = field(default=DEFAULT_TOL, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        H = as_matrix(self.H, "H")
        R = as_psd(self.R, self.tol, definite=True, name="R")
        C = as_matrix(self.C, "C")
        o = H.shape[0]
        if R.shape[0] != o:
            raise DimensionError(f"R is {R.shape[0]}x{R.shape[0]} but H has {o} rows")
        if C.shape[0] != o:
            raise DimensionError(f"C has {C.shape[0]} rows but H has {o}")
        if C.shape[1] != self.info.m:
            raise DimensionError(f"C has {C.shape[1]} columns but the bounds are on m = {self.info.m}")
        for name, a in (("H", H), ("R", R), ("C", C)):
            a = np.array(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def o(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.info.m

    @cached_property
    def Rinv(self) -> np.ndarray:
        return inv_pd(self.R)

    @cached_property
    def G(self) -> np.ndarray:
        """``H^T R^{-1} H``."""
        return symmetrize(self.H.T @ self.Rinv @ self.H)

    @cached_property
    def L(self) -> np.ndarray:
        """``H^T R^{-1} C``."""
        return self.H.T @ self.Rinv @ self.C

    @cached_property
    def N(self) -> np.ndarray:
        """``C^T R^{-1} C``."""
        return symmetrize(self.C.T @ self.Rinv @ self.C)

    @cached_property
    def H_full_rank(self) -> bool:
        return rank_tol(self.H, self.tol) == self.n

    def with_info(self, info: InfoStructure) -> "FusionProblem":
        return FusionProblem(self.H, self.R, self.C, info, self.tol, dict(self.metadata))


@dataclass(frozen=True)
class ProjectionBoundRequest:
    """Ask for ``M`` with ``D P D^T <= M`` for every admissible ``P``.

    ``gamma=None`` picks a small default scaled to the problem.
    """

    D: np.ndarray
    gamma: float | None = None
    kind: Objective = Objective.TRACE

    def __post_init__(self):
        D = as_matrix(self.D, "D")
        if np.ndim(self.D) == 1:
            D = D.reshape(1, -1)
        if np.any(np.all(D == 0.0, axis=1)):
            raise ValueError("D has an all-zero row")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        D = np.array(D)
        D.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "kind", Objective.parse(self.kind))

    @property
    def d(self) -> int:
        return self.D.shape[0]
