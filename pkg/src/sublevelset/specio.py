"""Problem-file parsing, result serialization, and grid CSV export.

Problem files are TOML (diff-able, hand-editable); their layout is pinned by
``schemas/problem.schema.json`` and unknown fields are rejected.  Results are
JSON with polynomial coefficients in graded-lex text form.  Grids are plain
CSV with one ``x1,...,xn,value`` row per grid node in row-major order; all
numbers are written with ``repr`` so parsing them back is exact and
locale-independent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .moments import Ball, Box, Domain, Region
from .polyalg import Polynomial
from .sdp import SolverOptions
from .setapprox import (
    PIPELINE_TOL,
    ApproxResult,
    Intersection,
    MinkowskiSum,
    PointCloud,
    PontryaginDiff,
    Union,
)

FORMAT_VERSION = "1"


def default_solver_options() -> SolverOptions:
    """Problem files default to the pipeline tolerance, not the raw solver's."""
    return SolverOptions(tol=PIPELINE_TOL)


class SpecError(ValueError):
    """Malformed problem or result file."""


@dataclass
class ProblemFile:
    version: str
    set_spec: object
    domain: Domain
    degrees: list
    metric: str
    solver: SolverOptions = field(default_factory=default_solver_options)
    output_directory: str = "results"
    grid_resolution: int = 161

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return (
            self.version == other.version
            and self.set_spec == other.set_spec
            and self.domain == other.domain
            and self.degrees == other.degrees
            and self.metric == other.metric
            and self.solver == other.solver
            and self.output_directory == other.output_directory
            and self.grid_resolution == other.grid_resolution
        )


def _schema():
    path = resources.files("sublevelset").joinpath("schemas/problem.schema.json")
    with path.open("r") as fh:
        return json.load(fh)


def _polys_from(pairs_list, num_vars):
    return tuple(Polynomial.from_pairs(p, num_vars) for p in pairs_list)


def _require(table, key, kind):
    if key not in table:
        raise SpecError(f"set.{key} is required for kind={kind!r}")
    return table[key]


def _spec_from_table(table) -> object:
    kind = table["kind"]
    n = table["num_vars"]
    if kind == "intersection":
        return Intersection(
            _polys_from(_require(table, "polynomials", kind), n),
            strict=table.get("strict", True),
        )
    if kind == "union":
        return Union(
            _polys_from(_require(table, "polynomials", kind), n),
            strict=table.get("strict", True),
        )
    if kind == "minkowski":
        return MinkowskiSum(
            Union(
                _polys_from(_require(table, "union_polynomials", kind), n),
                strict=False,
            ),
            Intersection(
                _polys_from(_require(table, "intersection_polynomials", kind), n),
                strict=False,
            ),
        )
    if kind == "pontryagin":
        return PontryaginDiff(
            Intersection(
                _polys_from(_require(table, "minuend_polynomials", kind), n),
                strict=True,
            ),
            Intersection(
                _polys_from(_require(table, "subtrahend_polynomials", kind), n),
                strict=False,
            ),
        )
    if kind == "points":
        pts = _require(table, "points", kind)
        if any(len(p) != n for p in pts):
            raise SpecError("points must match set.num_vars")
        return PointCloud(tuple(tuple(p) for p in pts))
    raise SpecError(f"unknown set kind {kind!r}")


def _spec_to_table(spec) -> dict:
    if isinstance(spec, Intersection):
        return {
            "kind": "intersection",
            "num_vars": spec.num_vars,
            "strict": spec.strict,
            "polynomials": [p.to_pairs() for p in spec.polys],
        }
    if isinstance(spec, Union):
        return {
            "kind": "union",
            "num_vars": spec.num_vars,
            "strict": spec.strict,
            "polynomials": [p.to_pairs() for p in spec.polys],
        }
    if isinstance(spec, MinkowskiSum):
        return {
            "kind": "minkowski",
            "num_vars": spec.num_vars,
            "union_polynomials": [p.to_pairs() for p in spec.summand_union.polys],
            "intersection_polynomials": [
                p.to_pairs() for p in spec.summand_intersection.polys
            ],
        }
    if isinstance(spec, PontryaginDiff):
        return {
            "kind": "pontryagin",
            "num_vars": spec.num_vars,
            "minuend_polynomials": [p.to_pairs() for p in spec.minuend.polys],
            "subtrahend_polynomials": [p.to_pairs() for p in spec.subtrahend.polys],
        }
    if isinstance(spec, PointCloud):
        return {
            "kind": "points",
            "num_vars": spec.num_vars,
            "points": [list(p) for p in spec.points],
        }
    raise SpecError(f"cannot serialize set {type(spec).__name__}")


def _region_from_table(table) -> Region:
    kind = table["kind"]
    if kind == "box":
        if "lo" not in table or "hi" not in table:
            raise SpecError("box region needs lo and hi")
        return Box(tuple(table["lo"]), tuple(table["hi"]))
    if "radius" not in table or "dimension" not in table:
        raise SpecError("ball region needs radius and dimension")
    return Ball(table["radius"], table["dimension"])


def _region_to_table(region: Region) -> dict:
    if isinstance(region, Box):
        return {"kind": "box", "lo": list(region.lo), "hi": list(region.hi)}
    return {"kind": "ball", "radius": region.radius, "dimension": region.num_vars}


def parse(source: str | Path) -> ProblemFile:
    """Parse a problem file from a path or raw TOML text."""
    if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and source.endswith(".toml")
    ):
        text = Path(source).read_text()
    else:
        text = str(source)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"TOML parse error: {exc}") from exc
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"schema violation at {path}: {exc.message}") from exc

    spec = _spec_from_table(data["set"])
    domain = Domain(
        data["domain"]["ball_radius"], _region_from_table(data["domain"]["region"])
    )
    if domain.num_vars != spec.num_vars:
        raise SpecError(
            f"set lives in {spec.num_vars} variables but the domain has "
            f"{domain.num_vars}"
        )
    solver_table = data.get("solver", {})
    defaults = default_solver_options()
    solver = SolverOptions(
        tol=solver_table.get("tol", defaults.tol),
        max_iter=solver_table.get("max_iter", defaults.max_iter),
        step_fraction=solver_table.get("step_fraction", defaults.step_fraction),
    )
    output = data.get("output", {})
    return ProblemFile(
        version=data["version"],
        set_spec=spec,
        domain=domain,
        degrees=list(data["run"]["degrees"]),
        metric=data["run"]["metric"],
        solver=solver,
        output_directory=output.get("directory", "results"),
        grid_resolution=output.get("grid_resolution", 161),
    )


def serialize(pf: ProblemFile) -> str:
    """Render a problem file back to TOML; parse(serialize(f)) == f."""
    doc = {
        "version": pf.version,
        "domain": {
            "ball_radius": pf.domain.ball_radius,
            "region": _region_to_table(pf.domain.region),
        },
        "set": _spec_to_table(pf.set_spec),
        "run": {"degrees": list(pf.degrees), "metric": pf.metric},
        "solver": {
            "tol": pf.solver.tol,
            "max_iter": pf.solver.max_iter,
            "step_fraction": pf.solver.step_fraction,
        },
        "output": {
            "directory": pf.output_directory,
            "grid_resolution": pf.grid_resolution,
        },
    }
    return _render_toml(doc)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise SpecError(f"cannot render {type(value).__name__} into TOML")


def _render_toml(doc: dict) -> str:
    lines = []

    def emit(table: dict, prefix: str):
        scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        if prefix and (scalars or not subtables):
            lines.append(f"[{prefix}]")
        for key, value in scalars.items():
            lines.append(f"{key} = {_toml_value(value)}")
        if scalars:
            lines.append("")
        for key, value in subtables.items():
            emit(value, f"{prefix}.{key}" if prefix else key)

    emit(doc, "")
    return "\n".join(lines).rstrip() + "\n"


# ---------------------------------------------------------------------------
# result files


def result_to_dict(result: ApproxResult, manifest: dict | None = None) -> dict:
    cert = result.certificate
    return {
        "version": FORMAT_VERSION,
        "metric": result.metric,
        "side": result.side,
        "strict_sublevel": result.strict_sublevel,
        "degree": result.degree,
        "num_vars": result.J.num_vars,
        "gamma": result.gamma,
        "objective_value": result.objective_value,
        "polynomial_j": result.J.to_pairs(),
        "polynomial_p": result.P.to_pairs() if result.P is not None else None,
        "domain": {
            "ball_radius": result.domain.ball_radius,
            "region": _region_to_table(result.domain.region),
        },
        "set": _spec_to_table(result.spec),
        "certificate": {
            "passed": cert.passed,
            "min_eigenvalue": cert.min_eigenvalue,
            "primal_residual": cert.primal_residual,
            "dual_residual": cert.dual_residual,
            "gap": cert.gap,
        },
        "shape": {
            "psd_dims": list(result.shape.psd_dims),
            "num_equalities": result.shape.num_equalities,
            "num_free": result.shape.num_free,
            "num_nonneg": result.shape.num_nonneg,
        },
        "max_coefficient_residual": result.max_residual(),
        "iterations": result.iterations,
        "manifest": manifest or {},
    }


def write_result(result: ApproxResult, path: str | Path, manifest: dict | None = None):
    Path(path).write_text(
        json.dumps(result_to_dict(result, manifest), indent=2, sort_keys=True) + "\n"
    )


@dataclass
class ResultFile:
    """The slice of a result file that verification consumes."""

    metric: str
    side: str
    strict_sublevel: bool
    degree: int
    gamma: float | None
    J: Polynomial
    P: Polynomial | None
    domain: Domain
    set_spec: object
    certificate_passed: bool
    raw: dict


def read_result(path: str | Path) -> ResultFile:
    data = json.loads(Path(path).read_text())
    if data.get("version") != FORMAT_VERSION:
        raise SpecError(
            f"result version {data.get('version')!r} != {FORMAT_VERSION!r}"
        )
    n = data["num_vars"]
    domain = Domain(
        data["domain"]["ball_radius"], _region_from_table(data["domain"]["region"])
    )
    return ResultFile(
        metric=data["metric"],
        side=data["side"],
        strict_sublevel=data["strict_sublevel"],
        degree=data["degree"],
        gamma=data["gamma"],
        J=Polynomial.from_pairs(data["polynomial_j"], n),
        P=(
            Polynomial.from_pairs(data["polynomial_p"], n)
            if data.get("polynomial_p") is not None
            else None
        ),
        domain=domain,
        set_spec=_spec_from_table(data["set"]),
        certificate_passed=data["certificate"]["passed"],
        raw=data,
    )


# ---------------------------------------------------------------------------
# grid CSV


def export_grid(p: Polynomial, region: Region, resolution: int) -> str:
    """CSV of p over a regular grid: ``x1,...,xn,value`` rows plus header.

    ``resolution`` is the number of points per axis; rows are emitted in
    row-major order over the axes.
    """
    if resolution < 2:
        raise SpecError("grid resolution must be at least 2 points per axis")
    if isinstance(region, Box):
        lo, hi = region.lo, region.hi
    else:
        lo = (-region.radius,) * region.num_vars
        hi = (region.radius,) * region.num_vars
    axes = [np.linspace(a, b, resolution) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    vals = p.eval_many(pts)
    header = ",".join(f"x{k + 1}" for k in range(region.num_vars)) + ",value"
    lines = [header]
    for row, val in zip(pts, vals):
        lines.append(",".join(repr(float(v)) for v in row) + "," + repr(float(val)))
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`export_grid`: returns (points, values)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines:
        raise SpecError("empty grid file")
    header = lines[0].split(",")
    if header[-1] != "value" or len(header) < 2:
        raise SpecError("grid file must have columns x1,...,xn,value")
    width = len(header)
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != width:
            raise SpecError(f"ragged grid row: {ln!r}")
        rows.append([float(v) for v in parts])
    data = np.array(rows)
    return data[:, :-1], data[:, -1]
