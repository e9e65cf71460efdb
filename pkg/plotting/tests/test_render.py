import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sublevelset_plots import JobError, PlotJob, read_grid, render
from sublevelset_plots.render import main


def write_grid_2d(path: Path, fn, n=21, lo=-1.0, hi=1.0):
    xs = [float(v) for v in np.linspace(lo, hi, n)]
    lines = ["x1,x2,value"]
    for a in xs:
        for b in xs:
            lines.append(f"{a!r},{b!r},{float(fn(a, b))!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_grid_3d(path: Path, fn, n=13, lo=-1.0, hi=1.0):
    xs = [float(v) for v in np.linspace(lo, hi, n)]
    lines = ["x1,x2,x3,value"]
    for a in xs:
        for b in xs:
            for c in xs:
                lines.append(f"{a!r},{b!r},{c!r},{float(fn(a, b, c))!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


class TestRender:
    def test_overlay_two_disks(self, tmp_path):
        g1 = write_grid_2d(tmp_path / "g1.csv", lambda a, b: a * a + b * b - 0.5)
        g2 = write_grid_2d(tmp_path / "g2.csv", lambda a, b: a * a + b * b - 0.2)
        out = tmp_path / "overlay.png"
        job = PlotJob(grids=[g1, g2], output=out, labels=["outer", "inner"])
        assert render(job) == out
        assert out.exists() and out.stat().st_size > 0

    def test_constant_grid_renders_blank(self, tmp_path):
        g = write_grid_2d(tmp_path / "c.csv", lambda a, b: 1.0)
        out = tmp_path / "blank.png"
        render(PlotJob(grids=[g], output=out))
        assert out.exists()

    def test_isosurface(self, tmp_path):
        g = write_grid_3d(
            tmp_path / "ball.csv", lambda a, b, c: a * a + b * b + c * c - 0.4
        )
        out = tmp_path / "iso.png"
        render(PlotJob(grids=[g], output=out))
        assert out.exists() and out.stat().st_size > 0

    def test_inputs_untouched_and_idempotent(self, tmp_path):
        g = write_grid_2d(tmp_path / "g.csv", lambda a, b: a * a + b * b - 0.5)
        before = g.read_bytes()
        out = tmp_path / "img.png"
        render(PlotJob(grids=[g], output=out))
        render(PlotJob(grids=[g], output=out))
        assert g.read_bytes() == before
        assert out.exists()


class TestErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(JobError, match="missing"):
            PlotJob(grids=[tmp_path / "nope.csv"], output=tmp_path / "x.png")

    def test_ragged_rows(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,x2,value\n0.0,0.0,1.0\n0.5,1.0\n")
        with pytest.raises(JobError, match="ragged"):
            read_grid(bad)

    def test_mixed_dimensions(self, tmp_path):
        g2 = write_grid_2d(tmp_path / "g2.csv", lambda a, b: a + b)
        g3 = write_grid_3d(tmp_path / "g3.csv", lambda a, b, c: a + b + c, n=5)
        with pytest.raises(JobError, match="dimensions"):
            render(PlotJob(grids=[g2, g3], output=tmp_path / "x.png"))

    def test_cli_exit_code_on_bad_input(self, tmp_path):
        code = main([str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o.png")])
        assert code == 1


class TestAgainstSolverExports:
    """Acceptance: render the grid exports of the solver package's demos.

    The solver is driven through its command-line interface only; nothing
    from its Python API is imported here.
    """

    def _run_demo(self, name, cwd, extra=()):
        proc = subprocess.run(
            [sys.executable, "-m", "sublevelset.cli", "demo", name, *extra],
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=600,
        )
        assert proc.returncode == 0, proc.stderr
        return Path(cwd) / f"demo_{name}"

    def test_union_disks_figure(self, tmp_path):
        demo_dir = self._run_demo("union-disks", tmp_path, ("--degrees", "2,6"))
        grids = sorted(demo_dir.glob("grid_volume_d*.csv"))
        members = sorted(demo_dir.glob("grid_member_*.csv"))
        out = tmp_path / "union.png"
        code = main(
            [*(str(g) for g in members), *(str(g) for g in grids), "--out", str(out)]
        )
        assert code == 0
        assert out.exists() and out.stat().st_size > 0

    def test_dubins_figure(self, tmp_path):
        demo_dir = self._run_demo("dubins", tmp_path)
        out = tmp_path / "cspace.png"
        code = main(
            [
                *(str(g) for g in sorted(demo_dir.glob("workspace_obstacle_*.csv"))),
                str(demo_dir / "cspace_grid.csv"),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert out.exists() and out.stat().st_size > 0
