"""``oci`` command-line front end.

Exit codes: 0 success, 1 bad input, 2 infeasible, 3 numerical trouble.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import feasibility, sim
from .errors import InfeasibleError, NoProjectionBoundError, NumericalTroubleError, OCIError
from .io import FileFormatError, read_problem, read_scenario
from .linalg import inv_pd
from .oracle import check_consistency
from .solver import solve_kahan_oci
from .structure import ellipsoid_boundary_points, sample_admissible

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as "infeasible"
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _fail(code: int, kind: str, message: str, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def cmd_feas(args) -> int:
    problem = read_problem(args.file).to_problem()
    rep = feasibility.analyze(problem, problem.tol)
    _emit(
        {
            "p_bounded": rep.p_bounded,
            "cpc_bounded": rep.cpc_bounded,
            "sufficient_feasible": rep.sufficient_feasible,
            "oci_feasible": rep.oci_feasible,
            "H_full_rank": rep.H_full_rank,
            "rank_margins": {k: (None if not np.isfinite(v) else float(v)) for k, v in rep.rank_margins.items()},
            "borderline": sorted(rep.borderline),
            "reason": rep.reason,
        }
    )
    return EXIT_OK if rep.oci_feasible else EXIT_INFEASIBLE


def cmd_solve(args) -> int:
    pf = read_problem(args.file)
    problem = pf.to_problem()
    obj = args.objective or pf.objective
    sol = solve_kahan_oci(problem, obj, problem.tol, pf.projection_request())
    out = {
        "K": sol.K.tolist(),
        "B": sol.B.tolist(),
        "omega": sol.omega.tolist(),
        "Y": sol.Y.tolist(),
        "objective": sol.objective.value,
        "objective_value": float(sol.objective_value),
    }
    if sol.M is not None:
        out["M"] = sol.M.tolist()
        out["gamma"] = float(sol.gamma)
    if args.check:
        v = check_consistency(problem, sol.K, sol.B, samples=args.check, seed=args.seed, tol=problem.tol)
        out["check"] = {
            "max_violation": v.max_violation,
            "samples": v.samples_checked,
            "seed": args.seed,
            "passed": v.passed,
        }
    _emit(out)
    return EXIT_OK


def write_metrics_csv(metrics: sim.SimMetrics, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "step", "vehicle", "sq_error", "bound", "method"])
        for r, k, v, e, b, m in sim.metrics_rows(metrics):
            w.writerow([r, k, v, repr(e), repr(b), m])


def cmd_simulate(args) -> int:
    scn = read_scenario(args.file).to_scenario()
    metrics = sim.run(scn, args.method)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(metrics, out / "metrics.csv")
    summary = metrics.summary()
    summary["seed"] = scn.seed
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(summary)
    return EXIT_OK


def plot_data(problem, seed: int, resolution: int = 64, samples: int = 50):
    """Point sets for each bound ellipsoid, the optimal Kahan ellipsoid and
    boundaries of sampled admissible ``P``.

    Every admissible ``P`` satisfies ``P^{-1} >= Y*``, so each sampled boundary
    point ``x`` (with ``x^T P^{-1} x = 1``) must satisfy ``x^T Y* x <= 1``;
    ``kahan_containment`` reports the largest such value.
    """
    m = problem.m
    if m not in (2, 3):
        raise FileFormatError(f"plot data needs m in (2, 3), got m = {m}", "bounds")
    sol = solve_kahan_oci(problem, "trace", problem.tol)
    sets = []
    for i, Yb in enumerate(problem.info.inverse_bounds()):
        sets.append((f"bound_{i + 1}", ellipsoid_boundary_points(Yb, resolution, problem.tol)))
    sets.append(("kahan", ellipsoid_boundary_points(sol.Y, resolution, problem.tol)))
    extremes = []
    worst = -np.inf
    for j, P in enumerate(sample_admissible(problem.info, samples, seed, boundary_fraction=1.0, tol=problem.tol)):
        pts = ellipsoid_boundary_points(inv_pd(P), resolution, problem.tol).points
        worst = max(worst, float(np.max(np.einsum("ij,jk,ik->i", pts, sol.Y, pts))))
        extremes.append((j, pts))
    return sol, sets, extremes, worst


def cmd_plotdata(args) -> int:
    problem = read_problem(args.file).to_problem()
    sol, sets, extremes, worst = plot_data(problem, args.seed, args.resolution, args.samples)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    axes = ["x", "y", "z"][: problem.m]
    with open(out / "ellipsoids.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["set", "point", *axes])
        for name, ep in sets:
            for i, p in enumerate(ep.points):
                w.writerow([name, i, *map(repr, map(float, p))])
    with open(out / "admissible.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "point", *axes])
        for j, pts in extremes:
            for i, p in enumerate(pts):
                w.writerow([j, i, *map(repr, map(float, p))])
    summary = {
        "sets": [
            {"name": n, "points": int(ep.points.shape[0]), "degenerate": ep.degenerate, "clip_radius": ep.clip_radius}
            for n, ep in sets
        ],
        "omega": sol.omega.tolist(),
        "admissible_samples": len(extremes),
        "kahan_containment": worst,
        "containment_ok": bool(worst <= 1.0 + problem.tol.tol_check),
        "seed": args.seed,
    }
    (out / "plotdata.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _emit(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="oci", description="Fusion under overlapping covariance bounds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("feas", help="run the feasibility tests on a problem file")
    f.add_argument("file")
    f.set_defaults(func=cmd_feas)

    s = sub.add_parser("solve", help="compute the optimal gain and bound")
    s.add_argument("file")
    s.add_argument("--objective", choices=["trace", "logdet"])
    s.add_argument("--check", type=int, default=0, metavar="N", help="verify with N sampled admissible matrices")
    s.add_argument("--seed", type=int, help="seed for --check")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="run the cooperative localization simulation")
    m.add_argument("file")
    m.add_argument("--method", choices=[x.value for x in sim.Method], default="oci")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_simulate)

    d = sub.add_parser("plotdata", help="emit ellipsoid point sets for m = 2 or 3")
    d.add_argument("file")
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, required=True)
    d.add_argument("--resolution", type=int, default=64)
    d.add_argument("--samples", type=int, default=50)
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "check", 0) and args.seed is None:
        parser.error("--check needs an explicit --seed")
    try:
        return args.func(args)
    except FileFormatError as exc:
        return _fail(EXIT_INPUT, "input", str(exc), location=exc.location)
    except (InfeasibleError, NoProjectionBoundError) as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(exc), reason=getattr(exc, "reason", "no_projection_bound"))
    except sim.SimulationError as exc:
        code = EXIT_NUMERICAL if isinstance(exc.__cause__, NumericalTroubleError) else EXIT_INFEASIBLE
        return _fail(code, "simulation", str(exc), step=exc.step, vehicle=exc.vehicle)
    except NumericalTroubleError as exc:
        return _fail(EXIT_NUMERICAL, "numerical", str(exc))
    except (OCIError, ValueError) as exc:
        return _fail(EXIT_INPUT, "input", str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
