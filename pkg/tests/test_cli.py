import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from kerrshg import cli, model


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# ")
    config = dict(part.split("=", 1) for part in lines[0][2:].split())
    rows = list(csv.DictReader(lines[1:]))
    return config, lines[1].split(","), rows


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestSweep:
    def test_vacuum_row(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("sweep", "--r", 0.15, "--n-min", 0, "--n-max", 0, "--n-steps", 1, "--out", out) == 0
        config, header, rows = read_csv(out)
        assert header == cli.SWEEP_HEADER
        (row,) = rows
        assert float(row["s_minus"]) == 1.0 and float(row["s_plus"]) == 1.0
        assert float(row["eta_a"]) == 1.0 and row["stable"] == "true"
        assert config["r"] == "0.15" and config["command"] == "sweep"

    def test_unstable_rows_and_db_columns(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("sweep", "--r", 0.15, "--n-max", 3, "--n-steps", 13, "--out", out) == 0
        _, _, rows = read_csv(out)
        for row in rows:
            if float(row["n"]) > 1.15:
                assert row["stable"] == "false"
                assert row["s_minus"] == row["omega_m"] == row["s_minus_db"] == ""
                assert row["eta_a"] != ""
            else:
                assert row["stable"] == "true"
                for lin, db in (("s_minus", "s_minus_db"), ("s_plus", "s_plus_db")):
                    assert abs(float(row[db]) - 10 * math.log10(float(row[lin]))) < 1e-10

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--r", 0.15, "--lambda-kerr", 0.75, "--n-max", 20, "--n-steps", 5]
        assert run(*args, "--out", a) == 0
        assert run(*args, "--out", b, "--workers", 2) == 0
        text_a = a.read_text().splitlines()
        text_b = b.read_text().splitlines()
        assert text_a[1:] == text_b[1:]

    def test_kappa_scale(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("sweep", "--r", 1e-6, "--n-min", 2, "--n-max", 2, "--n-steps", 1,
                   "--kappa-scale", "--out", out) == 0
        config, _, (row,) = read_csv(out)
        assert config["kappa_scale"] == "0.2"
        assert float(row["n"]) == 2.0
        direct = tmp_path / "d.csv"
        run("sweep", "--r", 1e-6, "--n-min", 0.4, "--n-max", 0.4, "--n-steps", 1, "--out", direct)
        assert read_csv(direct)[2][0]["s_minus"] == row["s_minus"]

    def test_harmonic_mode(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("sweep", "--r", 100, "--mode", "harmonic", "--n-min", 99, "--n-max", 99,
                   "--n-steps", 1, "--out", out) == 0
        assert float(read_csv(out)[2][0]["s_minus"]) < 0.1

    def test_stdout(self, capsys):
        assert run("sweep", "--r", 0.15, "--n-max", 0.5, "--n-steps", 2) == 0
        text = capsys.readouterr().out
        assert text.startswith("# ") and text.splitlines()[1] == ",".join(cli.SWEEP_HEADER)


class TestConfig:
    def test_file_overridden_by_flags(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("# comment\nr = 0.15\nlambda-kerr = 0.75\nn_max = 10\nn_steps = 3\n")
        out = tmp_path / "s.csv"
        assert run("sweep", "--config", conf, "--n-steps", 2, "--out", out) == 0
        config, _, rows = read_csv(out)
        assert config["lambda_kerr"] == "0.75"
        assert [float(r["n"]) for r in rows] == [0.0, 10.0]

    @pytest.mark.parametrize("argv", [
        ["sweep", "--n-max", 1],                         # missing r
        ["sweep", "--r", -1, "--n-max", 1],
        ["sweep", "--r", 0.1, "--n-min", 2, "--n-max", 1],
        ["sweep", "--r", 0.1, "--n-max", 1, "--kappa-scale", 0],
        ["sweep", "--r", 0.1, "--n-max", 1, "--mode", "both"],
        ["sweep", "--r", "abc"],
        ["nonsense"],
        ["sweep", "--r", 0.1, "--n-max", 1, "--plot"],   # plot needs --out
    ])
    def test_invalid_config(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            code = run(*argv)
            raise SystemExit(code)
        assert exc.value.code == 2
        err = capsys.readouterr().err.strip()
        assert len(err.splitlines()) == 1

    def test_bad_config_file(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("colour = blue\n")
        assert run("sweep", "--config", conf, "--r", 0.1, "--n-max", 1) == 2

    def test_io_error(self, tmp_path):
        missing = tmp_path / "no" / "such" / "dir" / "s.csv"
        assert run("sweep", "--r", 0.1, "--n-max", 1, "--n-steps", 2, "--out", missing) == 3
        assert run("sweep", "--config", tmp_path / "absent.conf", "--r", 0.1, "--n-max", 1) == 3


class TestSurface:
    def test_rows_and_vacuum(self, tmp_path):
        out = tmp_path / "f.csv"
        assert run("surface", "--r", 0.15, "--lambda-kerr", 0.75, "--n-max", 40, "--n-steps", 5,
                   "--omega-max", 40, "--omega-steps", 81, "--linear", "--out", out) == 0
        _, header, rows = read_csv(out)
        assert header == ["n", "omega", "s_minus"]
        assert len(rows) == 5 * 81
        assert all(float(r["s_minus"]) == 1.0 for r in rows if float(r["n"]) == 0.0)
        for n in (20.0, 30.0, 40.0):
            sub = [r for r in rows if float(r["n"]) == n]
            best = min(sub, key=lambda r: float(r["s_minus"]))
            assert float(best["omega"]) == pytest.approx(0.75 * n, rel=0.2)

    def test_db_default(self, tmp_path):
        out = tmp_path / "f.csv"
        assert run("surface", "--r", 0.15, "--n-max", 0.5, "--n-steps", 2,
                   "--omega-max", 1, "--omega-steps", 3, "--out", out) == 0
        _, header, rows = read_csv(out)
        assert header[-1] == "s_minus_db"
        assert float(rows[0]["s_minus_db"]) == 0.0

    def test_pure_shg_slice(self, tmp_path):
        out = tmp_path / "f.csv"
        assert run("surface", "--r", 1e-6, "--n-min", 0.2, "--n-max", 0.8, "--n-steps", 3,
                   "--omega-max", 5, "--omega-steps", 101, "--out", out) == 0
        _, _, rows = read_csv(out)
        for n in (0.2, 0.5, 0.8):
            sub = [r for r in rows if float(r["n"]) == pytest.approx(n)]
            best = min(sub, key=lambda r: float(r["s_minus_db"]))
            assert float(best["omega"]) <= 0.05


class TestStabilityMap:
    def test_boundary_matches_closed_form(self, tmp_path):
        out = tmp_path / "m.csv"
        r = 0.15
        assert run("stability-map", "--r", r, "--lambda-max", 0.7, "--lambda-steps", 15,
                   "--n-max", 20, "--n-steps", 201, "--out", out) == 0
        _, header, rows = read_csv(out)
        assert header == ["lambda_kerr", "n", "max_re", "stable"]
        cell = 20 / 200
        for lam in sorted({float(row["lambda_kerr"]) for row in rows}):
            sub = [row for row in rows if float(row["lambda_kerr"]) == lam]
            unstable = [float(row["n"]) for row in sub if row["stable"] == "false"]
            nc = model.critical_photon_number(r, lam)
            if nc > 20:
                assert not unstable
            else:
                assert abs(min(unstable) - nc) <= cell
            if lam == 0.0:
                assert abs(min(unstable) - (r + 1)) <= cell

    def test_render(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run("stability-map", "--r", 0.15, "--lambda-steps", 5, "--n-max", 10,
                   "--n-steps", 5, "--out", out, "--plot", "--emit-plot-script") == 0
        assert out.with_suffix(".png").stat().st_size > 0
        assert (tmp_path / "m_plot.py").exists()


class TestMaterial:
    def test_kdp_inputs(self, tmp_path):
        out = tmp_path / "k.csv"
        assert run("material", "--t-b", 0.2, "--lambda-b", 1.06e-6, "--length", 1e-2,
                   "--chi2", 1e-12, "--chi3", "1.5e-19,1e-18", "--out", out) == 0
        _, header, rows = read_csv(out)
        assert header[-2:] == ["lambda_kerr", "always_stable"]
        lams = [float(r["lambda_kerr"]) for r in rows]
        assert lams[0] == pytest.approx(0.2 / (4 * math.pi) * 1.06e-4 * 1.5e5, rel=1e-14)
        assert lams[1] == pytest.approx(0.2 / (4 * math.pi) * 1.06e-4 * 1e6, rel=1e-14)
        assert [r["always_stable"] for r in rows] == ["false", "true"]

    def test_domain(self):
        assert run("material", "--t-b", 1.5, "--lambda-b", 1e-6, "--length", 1e-2,
                   "--chi2", 1e-12, "--chi3", "1e-19") == 2


class TestOracleCheck:
    def test_vacuum_point(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        assert run("oracle-check", "--r", 0.15, "--lambda-kerr", 0.75, "--n", 0,
                   "--n-traj", 4, "--segments", 2, "--out", out) == 0
        _, header, rows = read_csv(out)
        assert header == ["omega", "z", "pass"]
        assert all(float(r["z"]) == 0.0 for r in rows)
        assert "PASS" in capsys.readouterr().err

    def test_unstable_point(self, capsys):
        assert run("oracle-check", "--r", 0.15, "--n", 3) == 2
        assert "UnstableSystem" in capsys.readouterr().err

    def test_small_run(self, tmp_path):
        out = tmp_path / "o.csv"
        code = run("oracle-check", "--r", 1.0, "--lambda-kerr", 0.3, "--n", 0.5,
                   "--omega-grid", "0,0.5,1", "--n-traj", 100, "--segments", 3,
                   "--seed", 42, "--out", out)
        config, _, rows = read_csv(out)
        assert len(rows) == 3
        assert int(config["windows"]) == 100 * (2 * 3 - 1)
        assert code == (0 if all(r["pass"] == "true" for r in rows) else 1)
        assert code == 0


class TestReportPath:
    def test_png_and_script(self, tmp_path):
        out = tmp_path / "fig.csv"
        assert run("sweep", "--r", 0.15, "--lambda-kerr", 0.75, "--n-max", 20, "--n-steps", 5,
                   "--out", out, "--plot", "--emit-plot-script") == 0
        png = tmp_path / "fig.png"
        script = tmp_path / "fig_plot.py"
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        replot = tmp_path / "replot.png"
        subprocess.run([sys.executable, str(script), str(replot)], check=True)
        assert replot.stat().st_size > 0

    def test_surface_script(self, tmp_path):
        out = tmp_path / "surf.csv"
        assert run("surface", "--r", 0.15, "--lambda-kerr", 0.75, "--n-max", 10, "--n-steps", 3,
                   "--omega-max", 10, "--omega-steps", 4, "--out", out, "--plot",
                   "--emit-plot-script") == 0
        subprocess.run([sys.executable, str(tmp_path / "surf_plot.py")], check=True)
        assert (tmp_path / "surf.png").stat().st_size > 0

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "kerrshg", "sweep", "--r", "0.15",
                               "--n-max", "0", "--n-steps", "1"],
                              capture_output=True, text=True, check=True)
        assert proc.stdout.splitlines()[2].startswith("0.0,")
        proc = subprocess.run([sys.executable, "-m", "kerrshg", "sweep"],
                              capture_output=True, text=True)
        assert proc.returncode == 2
        assert np.isclose(len(proc.stderr.strip().splitlines()), 1)
