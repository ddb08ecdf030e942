"""JSON file formats for problems and simulation scenarios.

Matrices are row-major nested lists. A bare number is accepted where a 1x1
matrix is expected and a flat list where a single row is expected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import OCIError
from .problem import FusionProblem, Objective, ProjectionBoundRequest
from .sim import NetworkScenario
from .structure import ComponentBound, InfoStructure

Number = float
MatrixLike = Union[Number, list[Number], list[list[Number]]]


class FileFormatError(OCIError):
    """A file could not be read or does not describe a valid object.

    ``location`` is ``"line L, column C"`` for JSON syntax errors and a dotted
    field path such as ``bounds.1.X`` otherwise.
    """

    def __init__(self, message: str, location: str | None = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def _matrix(v) -> list[list[float]]:
    a = np.asarray(v, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    elif a.ndim != 2:
        raise ValueError("expected a matrix")
    if a.size == 0:
        raise ValueError("matrix is empty")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a.tolist()


def _ragged_check(v):
    if isinstance(v, list) and v and isinstance(v[0], list):
        if len({len(r) for r in v}) != 1:
            raise ValueError("rows have different lengths")
    return v


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BoundEntry(_Strict):
    W: MatrixLike
    X: MatrixLike

    _ragged = field_validator("W", "X", mode="before")(_ragged_check)


class ProjectionEntry(_Strict):
    D: MatrixLike
    gamma: Optional[float] = Field(default=None, gt=0)
    kind: Literal["trace", "logdet"] = "trace"

    _ragged = field_validator("D", mode="before")(_ragged_check)


class ProblemFile(_Strict):
    H: MatrixLike
    R: MatrixLike
    C: MatrixLike
    bounds: list[BoundEntry] = Field(min_length=1)
    projection: Optional[ProjectionEntry] = None
    objective: Literal["trace", "logdet"] = "trace"

    _ragged = field_validator("H", "R", "C", mode="before")(_ragged_check)

    def to_problem(self) -> FusionProblem:
        comps = []
        for i, b in enumerate(self.bounds):
            try:
                comps.append(ComponentBound(_matrix(b.W), _matrix(b.X)))
            except ValueError as exc:
                raise FileFormatError(str(exc), f"bounds.{i}") from exc
        try:
            H, R, C = _matrix(self.H), _matrix(self.R), _matrix(self.C)
            info = InfoStructure(comps[0].m, tuple(comps))
            return FusionProblem(H, R, C, info)
        except ValueError as exc:
            raise FileFormatError(str(exc), "problem") from exc

    def projection_request(self) -> ProjectionBoundRequest | None:
        if self.projection is None:
            return None
        p = self.projection
        try:
            return ProjectionBoundRequest(_matrix(p.D), p.gamma, Objective.parse(p.kind))
        except ValueError as exc:
            raise FileFormatError(str(exc), "projection") from exc

    @classmethod
    def from_problem(cls, problem: FusionProblem, objective="trace", projection=None) -> "ProblemFile":
        proj = None
        if projection is not None:
            proj = ProjectionEntry(D=projection.D.tolist(), gamma=projection.gamma, kind=Objective.parse(projection.kind).value)
        return cls(
            H=problem.H.tolist(),
            R=problem.R.tolist(),
            C=problem.C.tolist(),
            bounds=[BoundEntry(W=b.W.tolist(), X=b.X.tolist()) for b in problem.info.bounds],
            projection=proj,
            objective=Objective.parse(objective).value,
        )


class ScenarioFile(_Strict):
    vehicles: int = Field(ge=1)
    edges: list[tuple[int, int]] = Field(default_factory=list)
    Q: list[float]
    R_meas: list[float]
    steps: int = Field(ge=0)
    seed: int
    monte_carlo_runs: int = Field(default=1, ge=1)
    initial_bounds: Optional[list[float]] = None
    initial_truth: Optional[list[float]] = None

    def to_scenario(self) -> NetworkScenario:
        try:
            return NetworkScenario(
                vehicle_count=self.vehicles,
                edges=tuple(tuple(e) for e in self.edges),
                Q=np.array(self.Q),
                R_meas=np.array(self.R_meas),
                steps=self.steps,
                seed=self.seed,
                monte_carlo_runs=self.monte_carlo_runs,
                initial_variance=None if self.initial_bounds is None else np.array(self.initial_bounds),
                initial_truth=None if self.initial_truth is None else np.array(self.initial_truth),
            )
        except ValueError as exc:
            raise FileFormatError(str(exc), "scenario") from exc


def _load_json(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"cannot read file: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc


def _validate(model, data):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err["loc"]) or None
        raise FileFormatError(err["msg"], loc) from exc


def read_problem(path) -> ProblemFile:
    pf = _validate(ProblemFile, _load_json(path))
    pf.to_problem()
    pf.projection_request()
    return pf


def read_scenario(path) -> ScenarioFile:
    sf = _validate(ScenarioFile, _load_json(path))
    sf.to_scenario()
    return sf


def dumps(model: BaseModel) -> str:
    return json.dumps(model.model_dump(exclude_none=True), indent=2) + "\n"
