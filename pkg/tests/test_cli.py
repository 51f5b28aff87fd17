"""Command-line runner: exit codes, config/flag precedence, CSV output."""

import subprocess
import sys

import pytest

from liblab import __version__, cli


def run_main(argv):
    return cli.main(argv)


def read_lines(path):
    return path.read_text().splitlines()


class TestExitCodes:
    def test_success(self, tmp_path):
        out = tmp_path / "hk.csv"
        code = run_main(
            ["heat-kernel", "--points", "3", "--t-min", "12", "--t-max", "40", "--out", str(out)]
        )
        assert code == 0
        assert out.exists()

    def test_config_error_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[heat-kernel]\nbogus = 1\n")
        assert run_main(["heat-kernel", "--config", str(cfg)]) == 2

    def test_config_error_missing_file(self, tmp_path):
        assert run_main(["heat-kernel", "--config", str(tmp_path / "nope.ini")]) == 2

    def test_config_error_bad_value(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[chi-orb]\ndelta = -1\n")
        assert run_main(["chi-orb", "--config", str(cfg)]) == 2

    def test_domain_error(self, tmp_path):
        # t_min below the supercritical threshold pi^2
        code = run_main(
            ["heat-kernel", "--points", "2", "--t-min", "1", "--t-max", "40",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == 3

    def test_io_error(self, tmp_path):
        code = run_main(
            ["heat-kernel", "--points", "2", "--out", str(tmp_path / "no_dir" / "x.csv")]
        )
        assert code == 4

    def test_unknown_subcommand(self, capsys):
        assert run_main(["not-an-experiment"]) == 2
        capsys.readouterr()


class TestConfigPrecedence:
    def test_config_applies(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[heat-kernel]\npoints = 4\nt-min = 13\nt-max = 50\n")
        out = tmp_path / "o.csv"
        assert run_main(["heat-kernel", "--config", str(cfg), "--out", str(out)]) == 0
        header = [l for l in read_lines(out) if l.startswith("#")]
        assert any("points = 4" in l for l in header)
        data = [l for l in read_lines(out) if not l.startswith("#")]
        assert len(data) == 1 + 4  # column row + 4 points

    def test_flag_beats_config(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[heat-kernel]\npoints = 4\nt-min = 13\nt-max = 50\n")
        out = tmp_path / "o.csv"
        code = run_main(
            ["heat-kernel", "--config", str(cfg), "--points", "2", "--out", str(out)]
        )
        assert code == 0
        header = [l for l in read_lines(out) if l.startswith("#")]
        assert any("points = 2" in l for l in header)
        data = [l for l in read_lines(out) if not l.startswith("#")]
        assert len(data) == 1 + 2

    def test_other_sections_ignored(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[bounds-51]\nbogus = 1\n[heat-kernel]\npoints = 2\n")
        out = tmp_path / "o.csv"
        assert run_main(["heat-kernel", "--config", str(cfg), "--out", str(out)]) == 0


class TestCsvOutput:
    def test_header_schema(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run_main(["bounds-51", "--m-list", "1,2", "--T-list", "1", "--out", str(out)]) == 0
        lines = read_lines(out)
        assert lines[0] == "# liberation-lab %s" % __version__
        assert lines[1] == "# schema = 1"
        header = [l for l in lines if l.startswith("#")]
        assert any(l.startswith("# experiment = bounds-51") for l in header)
        assert any(l.startswith("# seed = ") for l in header)
        cols = [l for l in lines if not l.startswith("#")][0]
        assert cols == "m,T,lhs,rhs,margin"

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["bounds-51", "--m-list", "1,2,3", "--T-list", "1,2"]
        assert run_main(args + ["--out", str(a)]) == 0
        assert run_main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_stdout_default(self, capsys):
        assert run_main(["bounds-51", "--m-list", "1", "--T-list", "1"]) == 0
        text = capsys.readouterr().out
        assert text.startswith("# liberation-lab")
        assert "m,T,lhs,rhs,margin" in text

    def test_bounds_margin_positive(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run_main(["bounds-51", "--m-list", "2", "--T-list", "1,4", "--out", str(out)]) == 0
        rows = [l.split(",") for l in read_lines(out) if not l.startswith("#")][1:]
        for m, T, lhs, rhs, margin in rows:
            assert float(margin) > 0


class TestConsoleScript:
    def test_entry_point_version(self):
        res = subprocess.run(
            [sys.executable, "-m", "liblab.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0
        assert __version__ in res.stdout

    def test_thread_cap_rejects_garbage(self, monkeypatch, capsys):
        monkeypatch.setenv("LIBLAB_THREADS", "lots")
        assert run_main(["bounds-51", "--m-list", "1", "--T-list", "1"]) == 2
        capsys.readouterr()

    def test_thread_cap_accepts_int(self, monkeypatch, capsys):
        monkeypatch.setenv("LIBLAB_THREADS", "1")
        assert run_main(["bounds-51", "--m-list", "1", "--T-list", "1"]) == 0
        capsys.readouterr()


class TestProp81Runner:
    def test_residuals_small(self, tmp_path):
        out = tmp_path / "p.csv"
        code = run_main(
            ["prop81-check", "--n-words", "2", "--s-list", "1/4", "--n-motions", "2",
             "--out", str(out)]
        )
        assert code == 0
        rows = [l.split(",") for l in read_lines(out) if not l.startswith("#")][1:]
        assert rows
        for row in rows:
            assert float(row[-1]) < 1e-9
