import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from sublevelset.cli import main

DISK_SPEC = """
version = "1"

[domain]
ball_radius = 1.0

[domain.region]
kind = "box"
lo = [-0.7, -0.7]
hi = [0.7, 0.7]

[set]
kind = "intersection"
num_vars = 2
strict = true
polynomials = [
  [[[2, 0], 1.0], [[0, 2], 1.0], [[0, 0], -0.0625]],
]

[run]
degrees = [2]
metric = "volume"

[output]
grid_resolution = 21
"""


@pytest.fixture()
def spec_file(tmp_path):
    path = tmp_path / "disk.toml"
    path.write_text(DISK_SPEC)
    return path


class TestApproximate:
    def test_writes_results_and_report(self, spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            ["approximate", "--spec", str(spec_file), "--out", str(out)]
        )
        assert code == 0
        assert (out / "result_d2.json").exists()
        assert (out / "grid_d2.csv").exists()
        assert (out / "report.txt").exists()
        assert (out / "manifest.json").exists()
        stdout = capsys.readouterr().out
        assert "degree 2" in stdout

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["degrees"] == [2]
        assert "solver" in manifest and "seeds" in manifest

    def test_reruns_are_byte_identical(self, spec_file, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        assert main(["approximate", "--spec", str(spec_file), "--out", str(out1)]) == 0
        assert main(["approximate", "--spec", str(spec_file), "--out", str(out2)]) == 0
        for name in ("result_d2.json", "grid_d2.csv", "report.txt", "manifest.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_degree_override(self, spec_file, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "approximate",
                "--spec",
                str(spec_file),
                "--out",
                str(out),
                "--degrees",
                "2,4",
            ]
        )
        assert code == 0
        assert (out / "result_d4.json").exists()


class TestVerify:
    def test_clean_result_verifies(self, spec_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["approximate", "--spec", str(spec_file), "--out", str(out)]) == 0
        capsys.readouterr()  # drain the approximate report
        code = main(
            [
                "verify",
                "--result",
                str(out / "result_d2.json"),
                "--spec",
                str(spec_file),
                "--resolution",
                "0.01",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["containment_violations"] == 0
        assert report["volume_distance"] <= report["volume_distance_bound"] + 1e-3
        assert report["hausdorff_distance"] is not None

    def test_report_file_written(self, spec_file, tmp_path):
        out = tmp_path / "out"
        main(["approximate", "--spec", str(spec_file), "--out", str(out)])
        report_path = tmp_path / "verify.json"
        code = main(
            [
                "verify",
                "--result",
                str(out / "result_d2.json"),
                "--spec",
                str(spec_file),
                "--resolution",
                "0.02",
                "--out",
                str(report_path),
            ]
        )
        assert code == 0
        assert report_path.exists()


MINKOWSKI_SPEC = """
version = "1"

[domain]
ball_radius = 1.1

[domain.region]
kind = "box"
lo = [-0.75, -0.75]
hi = [0.75, 0.75]

[set]
kind = "minkowski"
num_vars = 2
union_polynomials = [
  [[[2, 0], 1.0], [[0, 2], 1.0], [[0, 0], -0.0625]],
]
intersection_polynomials = [
  [[[2, 0], 1.0], [[0, 2], 1.0], [[0, 0], -0.0625]],
]

[run]
degrees = [4]
metric = "volume"

[output]
grid_resolution = 21
"""


class TestMinkowskiRoundTrip:
    def test_approximate_then_verify(self, tmp_path, capsys):
        spec = tmp_path / "mink.toml"
        spec.write_text(MINKOWSKI_SPEC)
        out = tmp_path / "out"
        assert main(["approximate", "--spec", str(spec), "--out", str(out)]) == 0
        capsys.readouterr()
        code = main(
            [
                "verify",
                "--result",
                str(out / "result_d4.json"),
                "--spec",
                str(spec),
                "--resolution",
                "0.02",
                "--w-resolution",
                "0.05",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["containment_violations"] == 0
        assert report["side"] == "outer"


class TestExitCodes:
    def test_missing_spec_is_input_error(self, tmp_path):
        code = main(
            ["approximate", "--spec", str(tmp_path / "nope.toml"), "--out", "x"]
        )
        assert code == 1

    def test_schema_violation_is_input_error(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text('version = "1"\nunknown = 3\n')
        assert main(["approximate", "--spec", str(bad), "--out", "x"]) == 1

    def test_solver_failure_is_exit_two(self, tmp_path):
        starved = DISK_SPEC + "\n[solver]\nmax_iter = 1\n"
        spec = tmp_path / "starved.toml"
        spec.write_text(starved)
        out = tmp_path / "out"
        assert main(["approximate", "--spec", str(spec), "--out", str(out)]) == 2

    def test_bad_flags_are_input_errors(self):
        assert main(["approximate"]) == 1
        assert main(["demo", "no-such-demo"]) == 1


class TestSweep:
    def test_sweep_runs_degree_list(self, spec_file, tmp_path):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep",
                "--spec",
                str(spec_file),
                "--degrees",
                "2,4",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert (out / "result_d2.json").exists()
        assert (out / "result_d4.json").exists()


@pytest.mark.slow
class TestDemos:
    def test_union_disks_demo(self, tmp_path):
        out = tmp_path / "demo"
        code = main(
            ["demo", "union-disks", "--out", str(out), "--degrees", "2"]
        )
        assert code == 0
        assert (out / "result_hausdorff_d2.json").exists()
        assert (out / "result_volume_d2.json").exists()
        assert (out / "grid_volume_d2.csv").exists()
        assert (out / "grid_member_1.csv").exists()


class TestConsoleScript:
    def test_entry_point_help(self):
        exe = shutil.which("sublevelset")
        if exe is None:
            pytest.skip("console script not on PATH")
        proc = subprocess.run(
            [exe, "--help"], capture_output=True, text=True, timeout=60
        )
        assert proc.returncode == 0
        assert "approximate" in proc.stdout
