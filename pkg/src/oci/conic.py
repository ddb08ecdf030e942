"""Standard-form conic programs and the Clarabel backend.

Programs are stored as ``min c^T x  s.t.  A x + s = b,  s in K`` with ``K`` a
product of zero, nonnegative, PSD-triangle and exponential cones. PSD blocks
use the upper triangle in column-major order with off-diagonal entries scaled
by sqrt(2), so ``svec(X) . svec(Y) = trace(X Y)``.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

SQRT2 = np.sqrt(2.0)


def svec(X: np.ndarray) -> np.ndarray:
    k = X.shape[0]
    iu, ju = _triu_colmajor(k)
    v = X[iu, ju].astype(float)
    v[iu != ju] *= SQRT2
    return v


def smat(v: np.ndarray, k: int) -> np.ndarray:
    iu, ju = _triu_colmajor(k)
    vals = np.array(v, dtype=float)
    vals[iu != ju] /= SQRT2
    X = np.zeros((k, k))
    X[iu, ju] = vals
    X[ju, iu] = vals
    return X


def _triu_colmajor(k: int):
    ii, jj = [], []
    for j in range(k):
        for i in range(j + 1):
            ii.append(i)
            jj.append(j)
    return np.array(ii, dtype=int), np.array(jj, dtype=int)


def sym_dim(k: int) -> int:
    return k * (k + 1) // 2


@dataclass(frozen=True)
class Cone:
    kind: str  # "zero" | "nonneg" | "psd" | "exp"
    size: int  # for psd, the matrix side length

    @property
    def rows(self) -> int:
        if self.kind == "psd":
            return sym_dim(self.size)
        if self.kind == "exp":
            return 3
        return self.size


@dataclass
class ConicProgram:
    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cones: list
    layout: dict  # variable name -> (offset, kind, size)
    objective_offset: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return self.c.size

    def psd_block_sizes(self) -> list:
        return [cn.size for cn in self.cones if cn.kind == "psd"]

    def digest(self) -> str:
        """Stable hash of the encoded data, for regression tests."""
        h = hashlib.sha256()
        for arr in (self.c, self.A.toarray(), self.b):
            h.update(np.ascontiguousarray(np.round(arr, 12)).tobytes())
        h.update(repr([(cn.kind, cn.size) for cn in self.cones]).encode())
        h.update(repr(sorted(self.layout.items())).encode())
        return h.hexdigest()

    def extract(self, x: np.ndarray, name: str) -> np.ndarray:
        off, kind, size = self.layout[name]
        if kind == "sym":
            return smat_entries(x[off : off + sym_dim(size)], size)
        if kind == "lower":
            Z = np.zeros((size, size))
            il = np.tril_indices(size)
            Z[il] = x[off : off + sym_dim(size)]
            return Z
        return np.array(x[off : off + size])


def smat_entries(v: np.ndarray, k: int) -> np.ndarray:
    """Symmetric matrix from its upper-triangle entries (no sqrt(2) scaling)."""
    iu, ju = _triu_colmajor(k)
    X = np.zeros((k, k))
    X[iu, ju] = v
    X[ju, iu] = v
    return X


class ProgramBuilder:
    """Collects variables first, then affine cone constraints."""

    def __init__(self):
        self.layout = {}
        self.nv = 0
        self._rows = []  # (A dense block, b vector, Cone)
        self.c = None
        self.objective_offset = 0.0

    # variables -----------------------------------------------------------
    def add_sym(self, name: str, k: int) -> int:
        return self._add(name, "sym", k, sym_dim(k))

    def add_lower(self, name: str, k: int) -> int:
        return self._add(name, "lower", k, sym_dim(k))

    def add_vec(self, name: str, k: int) -> int:
        return self._add(name, "vec", k, k)

    def _add(self, name, kind, size, count):
        if self._rows:
            raise RuntimeError("declare all variables before constraints")
        off = self.nv
        self.layout[name] = (off, kind, size)
        self.nv += count
        return off

    def index(self, name: str, i: int, j: int | None = None) -> int:
        off, kind, size = self.layout[name]
        if kind == "vec":
            return off + i
        if kind == "sym":
            if i > j:
                i, j = j, i
            return off + j * (j + 1) // 2 + i
        # lower triangle, row-major as numpy's tril_indices
        if i < j:
            raise IndexError("lower-triangular variable indexed above the diagonal")
        return off + i * (i + 1) // 2 + j

    # objective -----------------------------------------------------------
    def objective(self) -> np.ndarray:
        if self.c is None:
            self.c = np.zeros(self.nv)
        return self.c

    # constraints ---------------------------------------------------------
    def lmi(self, k: int) -> "LMI":
        return LMI(self, k)

    def add_rows(self, A: np.ndarray, b: np.ndarray, cone: Cone):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape != (cone.rows, self.nv) or b.shape != (cone.rows,):
            raise ValueError("constraint block has the wrong shape")
        self._rows.append((A, b, cone))

    def build(self) -> ConicProgram:
        A = np.vstack([r[0] for r in self._rows])
        b = np.concatenate([r[1] for r in self._rows])
        return ConicProgram(
            c=self.objective().copy(),
            A=sp.csc_matrix(A),
            b=b,
            cones=[r[2] for r in self._rows],
            layout=dict(self.layout),
            objective_offset=self.objective_offset,
        )


class LMI:
    """Affine symmetric matrix ``F0 + sum_j x_j F_j`` constrained to be PSD."""

    def __init__(self, builder: ProgramBuilder, k: int):
        self.pb = builder
        self.k = k
        self.F0 = np.zeros((k, k))
        self.terms = {}

    def _coef(self, j: int) -> np.ndarray:
        if j not in self.terms:
            self.terms[j] = np.zeros((self.k, self.k))
        return self.terms[j]

    def const(self, r0: int, c0: int, block):
        block = np.atleast_2d(np.asarray(block, dtype=float))
        p, q = block.shape
        self.F0[r0 : r0 + p, c0 : c0 + q] += block
        if r0 != c0:
            self.F0[c0 : c0 + q, r0 : r0 + p] += block.T
        return self

    def entry(self, i: int, j: int, var_index: int, coef: float = 1.0):
        F = self._coef(var_index)
        F[i, j] += coef
        if i != j:
            F[j, i] += coef
        return self

    def sym_var(self, r0: int, name: str, sign: float = 1.0):
        """Place symmetric variable ``name`` on the diagonal block at ``r0``."""
        _, kind, size = self.pb.layout[name]
        assert kind == "sym"
        for j in range(size):
            for i in range(j + 1):
                self.entry(r0 + i, r0 + j, self.pb.index(name, i, j), sign)
        return self

    def scaled(self, r0: int, c0: int, var_index: int, block):
        """Add ``x_j * block`` at ``(r0, c0)`` (mirrored if off-diagonal)."""
        block = np.atleast_2d(np.asarray(block, dtype=float))
        p, q = block.shape
        F = self._coef(var_index)
        F[r0 : r0 + p, c0 : c0 + q] += block
        if r0 != c0:
            F[c0 : c0 + q, r0 : r0 + p] += block.T
        return self

    def commit(self):
        A = np.zeros((sym_dim(self.k), self.pb.nv))
        for j, F in self.terms.items():
            A[:, j] = -svec(F)
        self.pb.add_rows(A, svec(self.F0), Cone("psd", self.k))


@dataclass
class ConicResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int
    solve_time: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.status == "Solved"

    @property
    def usable(self) -> bool:
        return self.status in ("Solved", "AlmostSolved")


def solve_clarabel(prog: ConicProgram, tol_solve: float = 1e-9, max_iter: int = 200) -> ConicResult:
    import clarabel

    cones = []
    for cn in prog.cones:
        if cn.kind == "zero":
            cones.append(clarabel.ZeroConeT(cn.size))
        elif cn.kind == "nonneg":
            cones.append(clarabel.NonnegativeConeT(cn.size))
        elif cn.kind == "psd":
            cones.append(clarabel.PSDTriangleConeT(cn.size))
        elif cn.kind == "exp":
            cones.append(clarabel.ExponentialConeT())
        else:
            raise ValueError(f"unknown cone {cn.kind}")
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_abs = tol_solve
    settings.tol_gap_rel = tol_solve
    settings.tol_feas = tol_solve
    settings.presolve_enable = False
    nv = prog.num_vars
    P = sp.csc_matrix((nv, nv))
    t0 = time.perf_counter()
    solver = clarabel.DefaultSolver(P, prog.c, prog.A, prog.b, cones, settings)
    sol = solver.solve()
    elapsed = time.perf_counter() - t0
    status = str(sol.status).split(".")[-1]
    return ConicResult(
        status=status,
        x=np.array(sol.x, dtype=float),
        objective=float(sol.obj_val) + prog.objective_offset,
        iterations=int(sol.iterations),
        solve_time=elapsed,
        diagnostics={
            "status": status,
            "iterations": int(sol.iterations),
            "primal_objective": float(sol.obj_val),
            "dual_objective": float(sol.obj_val_dual),
            "r_prim": float(sol.r_prim),
            "r_dual": float(sol.r_dual),
        },
    )
