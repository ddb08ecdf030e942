"""Cooperative localization of scalar random-walk vehicles.

Each vehicle ``v`` predicts its position from its last estimate and turns
every relative measurement to a neighbor ``p`` into a second estimate
``x_hat_p - y_vp``. The fused estimate is an affine combination of these.

Bookkeeping conventions:

* ``N(v)`` is ``v`` plus its neighbors, sorted by id. Bounds and error
  vectors over a neighborhood follow this order.
* The estimates at ``v`` (rows of the fusion problem) are the prediction
  first, then one per neighbor in id order.
* ``U(v)`` is the union of ``N(p)`` over ``p`` in ``N(v)``. The unknown
  correlation matrix in vehicle ``v``'s fusion problem is the joint error
  covariance over ``U(v)`` at the previous step. Its own bound and each
  neighbor's bound then apply to whole sub-vectors.
* Fusion is synchronous: every vehicle solves from the previous step's bounds,
  then gains are exchanged. With the neighbors' gains known, the next
  neighborhood error is ``F (chi_U - d_U) - G e`` and its covariance is
  bounded by ``F (M + diag(Q_U)) F^T + G diag(R) G^T`` with ``M`` a bound on
  the previous covariance over ``U(v)``.

Gains and bounds never depend on the measured values, so the schedule of
gains is computed once and reused for every Monte Carlo run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import OCIError
from .problem import FusionProblem, Objective, ProjectionBoundRequest
from .solver import solve_kahan_oci
from .structure import ComponentBound, InfoStructure


class Method(str, enum.Enum):
    OCI = "oci"
    SCI = "sci"
    NAIVE = "naive"


class SimulationError(OCIError):
    def __init__(self, message, step, vehicle, diagnostics=None):
        super().__init__(f"step {step}, vehicle {vehicle}: {message}")
        self.step = step
        self.vehicle = vehicle
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class NetworkScenario:
    vehicle_count: int
    edges: tuple
    Q: np.ndarray
    R_meas: np.ndarray
    steps: int
    seed: int
    monte_carlo_runs: int = 1
    initial_variance: np.ndarray | None = None
    initial_truth: np.ndarray | None = None

    def __post_init__(self):
        V = int(self.vehicle_count)
        if V < 1:
            raise ValueError("vehicle_count must be positive")
        edges = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on vehicle {a}")
            if not (0 <= a < V and 0 <= b < V):
                raise ValueError(f"edge ({a}, {b}) refers to an unknown vehicle")
            edges.append((min(a, b), max(a, b)))
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate edge")
        Q = np.asarray(self.Q, dtype=float).ravel()
        Rm = np.asarray(self.R_meas, dtype=float).ravel()
        if Q.shape != (V,) or np.any(Q <= 0):
            raise ValueError("Q needs one positive drift variance per vehicle")
        if Rm.shape != (len(edges),) or np.any(Rm <= 0):
            raise ValueError("R_meas needs one positive noise variance per edge")
        iv = np.ones(V) if self.initial_variance is None else np.asarray(self.initial_variance, dtype=float).ravel()
        if iv.shape != (V,) or np.any(iv <= 0):
            raise ValueError("initial_variance needs one positive value per vehicle")
        it = np.zeros(V) if self.initial_truth is None else np.asarray(self.initial_truth, dtype=float).ravel()
        if it.shape != (V,):
            raise ValueError("initial_truth needs one value per vehicle")
        if self.steps < 0 or self.monte_carlo_runs < 1:
            raise ValueError("steps must be >= 0 and monte_carlo_runs >= 1")
        object.__setattr__(self, "vehicle_count", V)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R_meas", Rm)
        object.__setattr__(self, "initial_variance", iv)
        object.__setattr__(self, "initial_truth", it)

    def neighbors(self, v: int) -> list:
        out = [b for a, b in self.edges if a == v] + [a for a, b in self.edges if b == v]
        return sorted(out)

    def hood(self, v: int) -> list:
        """``N(v)``: the vehicle and its neighbors, sorted by id."""
        return sorted([v] + self.neighbors(v))

    def estimates(self, v: int) -> list:
        """Whose position each of ``v``'s estimates is built from: ``v``
        itself (the prediction), then its neighbors by id."""
        return [v] + self.neighbors(v)

    def two_hop(self, v: int) -> list:
        out = set()
        for p in self.hood(v):
            out.update(self.hood(p))
        return sorted(out)

    def edge_noise(self, a: int, b: int) -> float:
        return float(self.R_meas[self.edges.index((min(a, b), max(a, b)))])


def line_scenario(n=3, steps=100, runs=50, seed=0, Q=1.0, R_meas=0.5, initial_variance=1.0):
    """``n`` vehicles on a path graph."""
    return NetworkScenario(
        vehicle_count=n,
        edges=tuple((i, i + 1) for i in range(n - 1)),
        Q=np.full(n, Q),
        R_meas=np.full(n - 1, R_meas),
        steps=steps,
        seed=seed,
        monte_carlo_runs=runs,
        initial_variance=np.full(n, initial_variance),
    )


@dataclass
class VehicleTracker:
    """Per-vehicle bound state. ``X_bound`` is over ``neighborhood`` (OCI);
    the scalar methods keep a 1x1 bound on the vehicle's own error."""

    vehicle: int
    neighborhood: list
    X_bound: np.ndarray

    @property
    def own_variance(self) -> float:
        i = self.neighborhood.index(self.vehicle)
        return float(self.X_bound[i, i])


@dataclass(frozen=True)
class StepGains:
    """Gains of one vehicle at one step, in estimate order."""

    gains: np.ndarray
    bound: float


@dataclass
class SimMetrics:
    method: str
    sq_error: np.ndarray  # runs x steps x vehicles
    error: np.ndarray  # runs x steps x vehicles
    bound: np.ndarray  # steps x vehicles
    diagnostics: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return self.bound.shape[0]

    def second_moment(self) -> np.ndarray:
        return self.sq_error.mean(axis=0)

    def second_moment_stderr(self) -> np.ndarray:
        runs = self.sq_error.shape[0]
        if runs < 2:
            return np.zeros(self.bound.shape)
        return self.sq_error.std(axis=0, ddof=1) / np.sqrt(runs)

    def rmse(self) -> np.ndarray:
        """Per-step RMSE over runs and vehicles."""
        if self.steps == 0:
            return np.zeros(0)
        return np.sqrt(self.sq_error.mean(axis=(0, 2)))

    def bound_trace(self) -> np.ndarray:
        return self.bound.sum(axis=1)

    def cell_valid(self, sigmas: float = 3.0) -> np.ndarray:
        """Cells where the sample second moment is within the bound plus slack."""
        return self.second_moment() <= self.bound + sigmas * self.second_moment_stderr()

    def violation_counts(self, multiplier: float = 1.0) -> np.ndarray:
        """Per-cell count of runs whose squared error exceeds ``multiplier * bound``."""
        return (self.sq_error > multiplier * self.bound[None]).sum(axis=0)

    def summary(self) -> dict:
        valid = self.cell_valid()
        return {
            "method": self.method,
            "runs": int(self.sq_error.shape[0]),
            "steps": int(self.steps),
            "vehicles": int(self.bound.shape[1]) if self.bound.ndim == 2 else 0,
            "mean_bound_trace": float(self.bound_trace().mean()) if self.steps else 0.0,
            "final_bound_trace": float(self.bound_trace()[-1]) if self.steps else 0.0,
            "mean_rmse": float(self.rmse().mean()) if self.steps else 0.0,
            "valid_cell_fraction": float(valid.mean()) if valid.size else 1.0,
            "violating_cell_fraction": float(1.0 - valid.mean()) if valid.size else 0.0,
        }


# ---------------------------------------------------------------------------
# fusion problems


def _noise_and_selector(scn: NetworkScenario, v: int, coords: list):
    """``R`` and ``C`` for vehicle ``v`` with ``P`` over ``coords``."""
    est = scn.estimates(v)
    R = np.diag([scn.Q[j] + (0.0 if j == v else scn.edge_noise(v, j)) for j in est])
    C = np.zeros((len(est), len(coords)))
    for r, j in enumerate(est):
        C[r, coords.index(j)] = 1.0
    return R, C


def build_fusion_problem(scn: NetworkScenario, v: int, bounds: dict) -> FusionProblem:
    """OCI problem at vehicle ``v``.

    ``bounds[p]`` is vehicle ``p``'s bound over ``N(p)`` for every ``p`` in
    ``N(v)``. The own bound comes first, then neighbors in id order.
    """
    coords = scn.two_hop(v)
    R, C = _noise_and_selector(scn, v, coords)
    comps = []
    for p in scn.estimates(v):
        if p not in bounds:
            raise KeyError(f"missing bound from vehicle {p}")
        hp = scn.hood(p)
        X = np.asarray(bounds[p], dtype=float)
        if X.shape != (len(hp), len(hp)):
            raise ValueError(f"bound from vehicle {p} has shape {X.shape}, expected {len(hp)}x{len(hp)}")
        W = np.zeros((len(hp), len(coords)))
        for r, j in enumerate(hp):
            W[r, coords.index(j)] = 1.0
        comps.append(ComponentBound(W, X))
    info = InfoStructure(len(coords), tuple(comps))
    return FusionProblem(np.ones((len(comps), 1)), R, C, info, metadata={"vehicle": v, "coords": coords})


def build_sci_problem(scn: NetworkScenario, v: int, variances: dict) -> FusionProblem:
    """Fusion at ``v`` knowing only a variance bound per vehicle in ``N(v)``."""
    hood = scn.hood(v)
    R, C = _noise_and_selector(scn, v, hood)
    comps = []
    for r, j in enumerate(hood):
        W = np.zeros((1, len(hood)))
        W[0, r] = 1.0
        comps.append(ComponentBound(W, [[variances[j]]]))
    return FusionProblem(np.ones((len(hood), 1)), R, C, InfoStructure(len(hood), tuple(comps)))


def _naive(scn: NetworkScenario, v: int, variances: dict) -> StepGains:
    var = np.array([variances[j] + scn.Q[j] + (0.0 if j == v else scn.edge_noise(v, j)) for j in scn.estimates(v)])
    info = 1.0 / var
    return StepGains(info / info.sum(), float(1.0 / info.sum()))


# ---------------------------------------------------------------------------
# synchronous bound recursion


def initial_trackers(scn: NetworkScenario) -> list:
    out = []
    for v in range(scn.vehicle_count):
        hood = scn.hood(v)
        out.append(VehicleTracker(v, hood, np.diag(scn.initial_variance[hood])))
    return out


def step(scn: NetworkScenario, trackers: list, k: int, method: Method | str):
    """One synchronous fusion round.

    Returns ``(new_trackers, gains)`` where ``gains[v]`` holds vehicle ``v``'s
    gains and its reported variance bound.
    """
    method = Method(method)
    V = scn.vehicle_count
    gains = []
    Ms = []
    if method is Method.OCI:
        bounds = {t.vehicle: t.X_bound for t in trackers}
        for v in range(V):
            prob = build_fusion_problem(scn, v, bounds)
            req = ProjectionBoundRequest(np.eye(prob.m))
            try:
                sol = solve_kahan_oci(prob, Objective.TRACE, req=req)
            except OCIError as exc:
                raise SimulationError(str(exc), k, v, getattr(exc, "diagnostics", {})) from exc
            gains.append(StepGains(sol.K[0].copy(), float(sol.B[0, 0])))
            Ms.append(sol.M)
    else:
        variances = {t.vehicle: t.own_variance for t in trackers}
        for v in range(V):
            if method is Method.NAIVE:
                gains.append(_naive(scn, v, variances))
                continue
            try:
                sol = solve_kahan_oci(build_sci_problem(scn, v, variances), Objective.TRACE)
            except OCIError as exc:
                raise SimulationError(str(exc), k, v, getattr(exc, "diagnostics", {})) from exc
            gains.append(StepGains(sol.K[0].copy(), float(sol.B[0, 0])))

    new = []
    for v in range(V):
        hood = scn.hood(v)
        if method is not Method.OCI:
            new.append(VehicleTracker(v, [v], np.array([[gains[v].bound]])))
            continue
        coords = scn.two_hop(v)
        F = np.zeros((len(hood), len(coords)))
        noise = np.zeros(len(hood))
        for r, j in enumerate(hood):
            for g, l in zip(gains[j].gains, scn.estimates(j)):
                F[r, coords.index(l)] += g
                if l != j:
                    noise[r] += g * g * scn.edge_noise(j, l)
        Qu = np.diag(scn.Q[coords])
        X = F @ (Ms[v] + Qu) @ F.T + np.diag(noise)
        new.append(VehicleTracker(v, hood, (X + X.T) / 2))
    return new, gains


def schedule(scn: NetworkScenario, method: Method | str) -> list:
    """Gains for every step: ``out[k][v]`` is a :class:`StepGains`."""
    trackers = initial_trackers(scn)
    out = []
    for k in range(1, scn.steps + 1):
        trackers, gains = step(scn, trackers, k, method)
        out.append(gains)
    return out


def _streams(scn: NetworkScenario, run: int) -> list:
    return [np.random.default_rng([scn.seed, run, v]) for v in range(scn.vehicle_count)]


def run(scn: NetworkScenario, method: Method | str) -> SimMetrics:
    method = Method(method)
    sched = schedule(scn, method)
    V, T, runs = scn.vehicle_count, scn.steps, scn.monte_carlo_runs
    sources = [scn.estimates(v) for v in range(V)]
    err = np.zeros((runs, T, V))
    for r in range(runs):
        rngs = _streams(scn, r)
        x = scn.initial_truth.copy()
        xhat = x + np.array([rngs[v].normal(0.0, np.sqrt(scn.initial_variance[v])) for v in range(V)])
        for k in range(T):
            x_new = x + np.array([rngs[v].normal(0.0, np.sqrt(scn.Q[v])) for v in range(V)])
            est = np.empty(V)
            for v in range(V):
                z = np.empty(len(sources[v]))
                for i, j in enumerate(sources[v]):
                    if j == v:
                        z[i] = xhat[v]
                    else:
                        y = x_new[j] - x_new[v] + rngs[v].normal(0.0, np.sqrt(scn.edge_noise(v, j)))
                        z[i] = xhat[j] - y
                est[v] = float(sched[k][v].gains @ z)
            x, xhat = x_new, est
            err[r, k] = xhat - x
    bound = np.array([[g.bound for g in row] for row in sched]).reshape(T, V)
    return SimMetrics(method.value, err**2, err, bound)


def metrics_rows(metrics: SimMetrics):
    """``(run, step, vehicle, sq_error, bound, method)`` tuples, steps numbered from 1."""
    runs, T, V = metrics.sq_error.shape
    for r in range(runs):
        for k in range(T):
            for v in range(V):
                yield r, k + 1, v, float(metrics.sq_error[r, k, v]), float(metrics.bound[k, v]), metrics.method
