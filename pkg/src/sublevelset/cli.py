"""Command-line entry point.

Subcommands: ``approximate`` (run a problem file at one or more degrees),
``verify`` (recompute containment and set metrics for a stored result),
``demo`` (narrative pipelines), and ``sweep`` (degree sweep of a problem
file).  Exit codes: 0 success, 1 input error, 2 solver failure.  All output
files are written atomically (temp file then rename) and reruns of the same
invocation produce byte-identical artifacts: manifests record versions,
seeds and tolerances, never wall-clock times.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .demos import (
    dubins_demo,
    lorenz_point_fit,
    minkowski_scene,
    pontryagin_scene,
    union_of_disks_scene,
)
from .metrics import (
    SampledSet,
    empirical_hausdorff,
    empirical_volume,
    grid_points,
    membership_many,
    sublevel_sample,
)
from .moments import Box
from .sdp import SdpError, SolverOptions
from .setapprox import (
    ApproximationError,
    Intersection,
    PointCloud,
    Union,
    UnsupportedFormulation,
    approximate,
)
from .sosprog import FormulationError
from .specio import (
    SpecError,
    export_grid,
    parse,
    read_result,
    serialize,
    write_result,
)

#: environment variable bounding the degree-sweep worker pool
THREADS_ENV = "SUBLEVELSET_THREADS"


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, min(4, os.cpu_count() or 1))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _manifest(solver: SolverOptions, extra: dict | None = None) -> dict:
    doc = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "solver": {
            "tol": solver.tol,
            "max_iter": solver.max_iter,
            "step_fraction": solver.step_fraction,
        },
        "seeds": {"monte_carlo": 42},
    }
    if extra:
        doc.update(extra)
    return doc


def _result_text(result, manifest) -> str:
    from .specio import result_to_dict

    return json.dumps(result_to_dict(result, manifest), indent=2, sort_keys=True) + "\n"


def _approximate_one(pf, degree, metric, out_dir: Path, grid_res: int):
    result = approximate(pf.set_spec, pf.domain, degree, metric, pf.solver)
    manifest = _manifest(pf.solver, {"degree": degree, "metric": metric})
    _atomic_write(
        out_dir / f"result_d{degree}.json", _result_text(result, manifest)
    )
    _atomic_write(
        out_dir / f"grid_d{degree}.csv",
        export_grid(result.J, pf.domain.region, grid_res),
    )
    return result


def _metric_report_lines(pf, results, resolution):
    lines = []
    for result in results:
        if result.metric == "hausdorff":
            lines.append(
                f"degree {result.degree}: gamma = {result.gamma:.6e}, "
                f"certificate {'pass' if result.certificate.passed else 'FAIL'}"
            )
        else:
            report = empirical_volume(
                pf.set_spec,
                (result.J, result.strict_sublevel),
                pf.domain.region,
                resolution=resolution,
            )
            lines.append(
                f"degree {result.degree}: objective = "
                f"{result.objective_value:.6e}, {report.text()}"
            )
    return lines


def cmd_approximate(args) -> int:
    pf = parse(Path(args.spec))
    metric = args.metric or pf.metric
    degrees = (
        [int(v) for v in args.degrees.split(",")] if args.degrees else pf.degrees
    )
    out_dir = Path(args.out or pf.output_directory)
    grid_res = args.grid_resolution or pf.grid_resolution

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        futures = [
            pool.submit(_approximate_one, pf, d, metric, out_dir, grid_res)
            for d in degrees
        ]
        results = [f.result() for f in futures]

    region = pf.domain.region
    extent = (
        min(b - a for a, b in zip(region.lo, region.hi))
        if isinstance(region, Box)
        else 2 * region.radius
    )
    resolution = args.resolution or extent / 160
    lines = _metric_report_lines(pf, results, resolution)
    _atomic_write(out_dir / "report.txt", "\n".join(lines) + "\n")
    _atomic_write(
        out_dir / "manifest.json",
        json.dumps(
            _manifest(pf.solver, {"degrees": degrees, "metric": metric}),
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    for line in lines:
        print(line)
    return 0


def cmd_sweep(args) -> int:
    # a sweep is approximate over an explicit degree list
    args.degrees = args.degrees or None
    return cmd_approximate(args)


def cmd_verify(args) -> int:
    pf = parse(Path(args.spec))
    stored = read_result(Path(args.result))
    spec = pf.set_spec
    region = pf.domain.region
    resolution = args.resolution

    pts, _, spacing = grid_points(region, resolution)
    member = membership_many(spec, pts, region, w_resolution=args.w_resolution)
    J_vals = stored.J.eval_many(pts)
    inside_J = J_vals < 0 if stored.strict_sublevel else J_vals <= 0

    if stored.side == "inner":
        violations = int(np.sum(inside_J & ~member))
    else:
        violations = int(np.sum(member & (J_vals > 1e-6)))

    vol = empirical_volume(
        spec,
        (stored.J, stored.strict_sublevel),
        region,
        resolution=resolution,
        w_resolution=args.w_resolution,
    )

    hausdorff = None
    if member.any() and inside_J.any():
        hausdorff = empirical_hausdorff(
            SampledSet(pts[member], spacing, source="grid"),
            SampledSet(pts[inside_J], spacing, source="grid"),
        )

    report = {
        "containment_violations": violations,
        "volume_distance": vol.value,
        "volume_distance_bound": vol.bound,
        "hausdorff_distance": hausdorff,
        "grid_spacing": spacing,
        "side": stored.side,
        "degree": stored.degree,
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        _atomic_write(Path(args.out), text)
    print(text, end="")
    return 0


def _demo_union_disks(out_dir: Path, degrees) -> None:
    polys, dom = union_of_disks_scene()
    solver = SolverOptions(tol=5e-7)
    for metric, strict in (("hausdorff", True), ("volume", False)):
        spec = Union(polys, strict=strict)
        for d in degrees or (2, 6):
            result = approximate(spec, dom, d, metric, solver)
            stem = f"{metric}_d{d}"
            _atomic_write(
                out_dir / f"result_{stem}.json",
                _result_text(result, _manifest(solver, {"demo": "union-disks"})),
            )
            _atomic_write(
                out_dir / f"grid_{stem}.csv",
                export_grid(result.J, dom.region, 161),
            )
    for i, g in enumerate(polys, start=1):
        _atomic_write(
            out_dir / f"grid_member_{i}.csv", export_grid(g, dom.region, 161)
        )


def _demo_minkowski(out_dir: Path, degrees) -> None:
    spec, dom = minkowski_scene()
    solver = SolverOptions(tol=5e-7)
    for d in degrees or (2, 6):
        result = approximate(spec, dom, d, "volume", solver)
        _atomic_write(
            out_dir / f"result_d{d}.json",
            _result_text(result, _manifest(solver, {"demo": "minkowski"})),
        )
        _atomic_write(
            out_dir / f"grid_d{d}.csv", export_grid(result.J, dom.region, 161)
        )


def _demo_pontryagin(out_dir: Path, degrees) -> None:
    spec, dom = pontryagin_scene()
    solver = SolverOptions(tol=5e-7)
    for d in degrees or (4, 6):
        result = approximate(spec, dom, d, "volume", solver)
        _atomic_write(
            out_dir / f"result_d{d}.json",
            _result_text(result, _manifest(solver, {"demo": "pontryagin"})),
        )
        _atomic_write(
            out_dir / f"grid_d{d}.csv", export_grid(result.J, dom.region, 161)
        )


def _demo_lorenz(out_dir: Path, degrees) -> None:
    degree = (degrees or (8,))[0]
    fit = lorenz_point_fit(degree=degree)
    _atomic_write(
        out_dir / "result.json",
        _result_text(
            fit.result,
            _manifest(SolverOptions(tol=5e-7), {"demo": "lorenz", **fit.metadata}),
        ),
    )
    lines = ["x1,x2,x3"] + [
        ",".join(repr(float(v)) for v in p) for p in fit.normalized_points
    ]
    _atomic_write(out_dir / "points.csv", "\n".join(lines) + "\n")
    _atomic_write(
        out_dir / "grid.csv", export_grid(fit.result.J, fit.result.domain.region, 41)
    )


def _demo_dubins(out_dir: Path, degrees) -> None:
    degree = (degrees or (8,))[0]
    demo = dubins_demo(degree=degree)
    _atomic_write(
        out_dir / "cspace_result.json",
        _result_text(
            demo.cspace, _manifest(SolverOptions(tol=2e-6), {"demo": "dubins"})
        ),
    )
    _atomic_write(
        out_dir / "cspace_grid.csv",
        export_grid(demo.cspace.J, demo.domain.region, 161),
    )
    for i, g in enumerate(demo.scene.summand_union.polys, start=1):
        _atomic_write(
            out_dir / f"workspace_obstacle_{i}.csv",
            export_grid(g, demo.domain.region, 161),
        )
    if demo.plan is None:
        raise ApproximationError("planner found no path through the C-space")
    plan_doc = {
        "input_indices": demo.plan.input_indices,
        "steering_angles": demo.plan.steering_angles,
        "states": demo.plan.states.tolist(),
        "start": list(demo.start),
        "target": {"lo": list(demo.target.lo), "hi": list(demo.target.hi)},
    }
    _atomic_write(
        out_dir / "plan.json", json.dumps(plan_doc, indent=2, sort_keys=True) + "\n"
    )


DEMOS = {
    "union-disks": _demo_union_disks,
    "minkowski": _demo_minkowski,
    "pontryagin": _demo_pontryagin,
    "lorenz": _demo_lorenz,
    "dubins": _demo_dubins,
}


def cmd_demo(args) -> int:
    out_dir = Path(args.out or f"demo_{args.name}")
    degrees = (
        tuple(int(v) for v in args.degrees.split(",")) if args.degrees else None
    )
    DEMOS[args.name](out_dir, degrees)
    print(f"demo {args.name}: artifacts in {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sublevelset",
        description="Polynomial sublevel-set approximation of sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approximate", help="run a problem file")
    p.add_argument("--spec", required=True, help="problem file (TOML)")
    p.add_argument("--metric", choices=["hausdorff", "volume"])
    p.add_argument("--degrees", help="comma-separated degree list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid-resolution", type=int, dest="grid_resolution")
    p.add_argument("--resolution", type=float, help="metric grid spacing")
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("sweep", help="degree sweep of a problem file")
    p.add_argument("--spec", required=True)
    p.add_argument("--degrees", required=True, help="comma-separated degree list")
    p.add_argument("--metric", choices=["hausdorff", "volume"])
    p.add_argument("--out")
    p.add_argument("--grid-resolution", type=int, dest="grid_resolution")
    p.add_argument("--resolution", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="recheck a stored result")
    p.add_argument("--result", required=True, help="result file (JSON)")
    p.add_argument("--spec", required=True, help="problem file (TOML)")
    p.add_argument("--resolution", type=float, default=0.005)
    p.add_argument("--w-resolution", type=float, default=0.02, dest="w_resolution")
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="run a narrative demo")
    p.add_argument("name", choices=sorted(DEMOS))
    p.add_argument("--out")
    p.add_argument("--degrees", help="comma-separated degree list")
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (SpecError, FormulationError, UnsupportedFormulation, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (ApproximationError, SdpError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
