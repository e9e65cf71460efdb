"""Render sublevelset grid CSV exports into figures.

This package is deliberately independent of the solver package: it consumes
only the documented file formats (grid CSV with an ``x1,...,xn,value``
header, optional point CSV with an ``x1,...`` header, optional path CSV) and
writes image files.  Two-dimensional grids become zero-level contour
overlays; three-dimensional grids become a zero-isosurface.  The contour
level is fixed at zero, the sublevel threshold of every exported result.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class JobError(ValueError):
    """Missing input, unparseable CSV, or inconsistent grid dimensions."""


#: cycled over the grids of an overlay figure
DEFAULT_COLORS = ("tab:red", "tab:blue", "tab:green", "tab:orange", "tab:purple")


@dataclass
class PlotJob:
    grids: list
    output: Path
    labels: list = field(default_factory=list)
    colors: list = field(default_factory=list)
    fills: list = field(default_factory=list)
    points: Path | None = None
    path: Path | None = None
    title: str | None = None

    def __post_init__(self):
        self.grids = [Path(p) for p in self.grids]
        self.output = Path(self.output)
        if not self.grids:
            raise JobError("a plot job needs at least one grid")
        for p in self.grids + ([self.points] if self.points else []) + (
            [self.path] if self.path else []
        ):
            if not Path(p).exists():
                raise JobError(f"input file missing: {p}")


def read_grid(path: Path):
    """Parse a grid CSV into (axes, values) with values shaped to the grid."""
    lines = [ln for ln in Path(path).read_text().strip().splitlines() if ln]
    if not lines:
        raise JobError(f"{path}: empty file")
    header = lines[0].split(",")
    if len(header) < 2 or header[-1] != "value":
        raise JobError(f"{path}: expected header x1,...,xn,value")
    dim = len(header) - 1
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != dim + 1:
            raise JobError(f"{path}: ragged row {ln!r}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise JobError(f"{path}: {exc}") from exc
    data = np.asarray(rows)
    axes = []
    for k in range(dim):
        axes.append(np.unique(data[:, k]))
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != len(data):
        raise JobError(f"{path}: rows do not fill a regular grid")
    values = data[:, -1].reshape(shape)
    return axes, values


def read_points(path: Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().strip().splitlines() if ln]
    if len(lines) < 2:
        raise JobError(f"{path}: no points")
    width = len(lines[0].split(","))
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != width:
            raise JobError(f"{path}: ragged row {ln!r}")
        out.append([float(v) for v in parts])
    return np.asarray(out)


def _render_2d(job: PlotJob, parsed) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    for k, (axes, values) in enumerate(parsed):
        color = (job.colors[k] if k < len(job.colors) else None) or DEFAULT_COLORS[
            k % len(DEFAULT_COLORS)
        ]
        label = job.labels[k] if k < len(job.labels) else job.grids[k].stem
        fill = job.fills[k] if k < len(job.fills) else False
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        if values.min() < 0 < values.max():
            if fill:
                ax.contourf(
                    X, Y, values, levels=[values.min(), 0.0], colors=[color], alpha=0.25
                )
            ax.contour(X, Y, values, levels=[0.0], colors=[color])
        ax.plot([], [], color=color, label=label)
    if job.points is not None:
        pts = read_points(job.points)
        ax.plot(pts[:, 0], pts[:, 1], ".", color="black", markersize=2, label="points")
    if job.path is not None:
        pts = read_points(job.path)
        ax.plot(pts[:, 0], pts[:, 1], "-", color="black", linewidth=1.5, label="path")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    if job.title:
        ax.set_title(job.title)
    fig.savefig(job.output, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _render_3d(job: PlotJob, parsed) -> None:
    from skimage import measure

    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    drew_surface = False
    for k, (axes, values) in enumerate(parsed):
        color = (job.colors[k] if k < len(job.colors) else None) or DEFAULT_COLORS[
            k % len(DEFAULT_COLORS)
        ]
        if not (values.min() < 0 < values.max()):
            continue
        spacing = tuple(float(a[1] - a[0]) for a in axes)
        verts, faces, _, _ = measure.marching_cubes(values, level=0.0, spacing=spacing)
        verts += np.array([a[0] for a in axes])
        ax.plot_trisurf(
            verts[:, 0],
            verts[:, 1],
            faces,
            verts[:, 2],
            color=color,
            alpha=0.5,
            linewidth=0,
        )
        drew_surface = True
    if job.points is not None:
        pts = read_points(job.points)
        ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=2, color="black")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_zlabel("x3")
    if job.title:
        ax.set_title(job.title)
    if not drew_surface and job.points is None:
        ax.text2D(0.3, 0.5, "no zero crossing", transform=ax.transAxes)
    fig.savefig(job.output, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render(job: PlotJob) -> Path:
    """Render the job to its output image; inputs are never modified."""
    parsed = [read_grid(p) for p in job.grids]
    dims = {len(axes) for axes, _ in parsed}
    if len(dims) != 1:
        raise JobError(f"grids mix dimensions: {sorted(dims)}")
    dim = dims.pop()
    job.output.parent.mkdir(parents=True, exist_ok=True)
    if dim == 2:
        _render_2d(job, parsed)
    elif dim == 3:
        _render_3d(job, parsed)
    else:
        raise JobError(f"cannot render {dim}-dimensional grids")
    return job.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sublevelset-plots",
        description="Render grid CSV exports to contour or isosurface figures",
    )
    parser.add_argument("grids", nargs="+", help="grid CSV files to overlay")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--label", action="append", default=[], dest="labels")
    parser.add_argument("--color", action="append", default=[], dest="colors")
    parser.add_argument(
        "--fill",
        action="append",
        default=[],
        dest="fills",
        type=lambda v: v.lower() in ("1", "true", "yes"),
        help="shade the negative region of the matching grid",
    )
    parser.add_argument("--points", help="scatter overlay CSV")
    parser.add_argument("--path", help="trajectory overlay CSV")
    parser.add_argument("--title")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        job = PlotJob(
            grids=args.grids,
            output=args.out,
            labels=args.labels,
            colors=args.colors,
            fills=args.fills,
            points=args.points,
            path=args.path,
            title=args.title,
        )
        render(job)
    except JobError as exc:
        print(f"plot job error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
