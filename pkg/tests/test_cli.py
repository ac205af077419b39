"""CLI tests: commands, config files, exit codes, determinism, figure curves."""

import os

import numpy as np
import pytest

from dcl.cli import main


def read_csv(path):
    """Parse a CSV written by the CLI: '#' metadata lines, then header + rows."""
    meta, header, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif header is None:
                header = line.split(",")
            else:
                rows.append([float(tok) for tok in line.split(",")])
    return meta, header, np.array(rows)


def run(tmp_path, *argv):
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return main(list(argv))
    finally:
        os.chdir(cwd)


class TestSingleBounds:
    def test_writes_expected_columns(self, tmp_path):
        out = tmp_path / "bounds.csv"
        code = run(tmp_path, "single-bounds", "--K-max", "15", "--R", "1", "--P-dB", "20",
                   "--inv-lambda", "10", "--out", str(out))
        assert code == 0
        meta, header, rows = read_csv(out)
        assert header == ["K", "lower", "upper", "high_snr"]
        assert rows.shape == (15, 4)
        assert np.all(rows[:, 1] <= rows[:, 2] + 1e-12)
        assert meta["P_linear"] == "100.0"

    def test_bad_k_max_exits_2_without_file(self, tmp_path):
        out = tmp_path / "never.csv"
        code = run(tmp_path, "single-bounds", "--K-max", "0", "--out", str(out))
        assert code == 2
        assert not out.exists()

    def test_lognormal_drops_analytic_column(self, tmp_path):
        out = tmp_path / "ln.csv"
        code = run(tmp_path, "single-bounds", "--K-max", "4", "--fading", "lognormal",
                   "--out", str(out))
        assert code == 0
        _, header, _ = read_csv(out)
        assert header == ["K", "lower", "upper"]


class TestConfigFile:
    def test_file_values_and_flag_override(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("K = 4\nR = 0.5\nP-dB = 10\ninv-lambda = 5\ntrials = 10000\nseed = 2\n")
        out1 = tmp_path / "a.csv"
        assert run(tmp_path, "mc", "--config", str(conf), "--out", str(out1)) == 0
        meta, _, rows = read_csv(out1)
        assert meta["K"] == "4"
        out2 = tmp_path / "b.csv"
        assert run(tmp_path, "mc", "--config", str(conf), "--seed", "3",
                   "--out", str(out2)) == 0
        meta2, _, rows2 = read_csv(out2)
        assert meta2["seed"] == "3"
        assert rows2[0][3] == 3.0

    def test_unknown_key_rejected(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("bogus = 1\n")
        assert run(tmp_path, "mc", "--config", str(conf)) == 2

    def test_unparseable_value_rejected(self, tmp_path):
        conf = tmp_path / "bad2.conf"
        conf.write_text("trials = many\n")
        assert run(tmp_path, "mc", "--config", str(conf)) == 2


class TestExitCodes:
    def test_infeasible_program_is_3(self, tmp_path):
        assert run(tmp_path, "power-opt", "--K", "2", "--R", "2", "--P", "3",
                   "--objective", "lognormal") == 3

    def test_model_domain_error_is_4(self, tmp_path):
        # exponent beyond the threshold mu_Y
        assert run(tmp_path, "exponent", "--K", "5", "--inv-lambda", "5",
                   "--t-list", "0.9") == 4

    def test_unknown_flag_is_2(self, tmp_path):
        assert run(tmp_path, "mc", "--definitely-not-a-flag", "1") == 2


class TestDeterminism:
    COMMANDS = {
        "single-bounds": ["single-bounds", "--K-max", "6"],
        "optimal-k": ["optimal-k"],
        "power-opt": ["power-opt", "--K", "3"],
        "capacity": ["capacity", "--K-max", "2", "--trials", "20000", "--seed", "5",
                     "--P", "10", "--eta", "0.4", "--fading", "rayleigh"],
        "mc": ["mc", "--trials", "30000", "--seed", "5"],
        "parallel": ["parallel", "--N-list", "20,40", "--trials", "20000", "--seed", "5"],
        "exponent": ["exponent", "--t-list", "0.2,0.4"],
        "reproduce-fig": ["reproduce-fig", "1", "--K-max", "5"],
    }

    @pytest.mark.parametrize("name", sorted(COMMANDS))
    def test_byte_identical_across_runs_and_threads(self, tmp_path, monkeypatch, name):
        argv = self.COMMANDS[name]
        out1, out2, out3 = (tmp_path / f"{name}-{i}.csv" for i in range(3))
        monkeypatch.setenv("DCL_THREADS", "1")
        assert run(tmp_path, *argv, "--out", str(out1)) == 0
        assert run(tmp_path, *argv, "--out", str(out2)) == 0
        monkeypatch.setenv("DCL_THREADS", "8")
        assert run(tmp_path, *argv, "--out", str(out3)) == 0
        assert out1.read_bytes() == out2.read_bytes() == out3.read_bytes()

    def test_version_line_toggle(self, tmp_path):
        out1, out2 = tmp_path / "v1.csv", tmp_path / "v2.csv"
        run(tmp_path, "optimal-k", "--out", str(out1))
        run(tmp_path, "optimal-k", "--out", str(out2), "--omit-version")
        lines1 = out1.read_text().splitlines()
        lines2 = out2.read_text().splitlines()
        assert lines1[0].startswith("# dcl_version")
        assert lines1[1:] == lines2


class TestFigures:
    def test_fig2_interior_minimum(self, tmp_path):
        out = tmp_path / "fig2.csv"
        assert run(tmp_path, "reproduce-fig", "2", "--out", str(out)) == 0
        _, header, rows = read_csv(out)
        approx = rows[:, header.index("high_snr")]
        k_min = int(np.argmin(approx))
        assert 0 < k_min < rows.shape[0] - 1

    def test_fig3_optimized_below_uniform(self, tmp_path):
        out = tmp_path / "fig3.csv"
        assert run(tmp_path, "reproduce-fig", "3", "--trials", "50000", "--seed", "3",
                   "--out", str(out)) == 0
        _, header, rows = read_csv(out)
        uniform = rows[:, header.index("uniform_outage")]
        optimized = rows[:, header.index("optimized_outage")]
        assert np.all(optimized[1:] <= uniform[1:])  # every K >= 2

    def test_fig5_threshold_split(self, tmp_path):
        out = tmp_path / "fig5.csv"
        assert run(tmp_path, "reproduce-fig", "5", "--trials", "20000", "--seed", "7",
                   "--N-list", "25,50,100", "--out", str(out)) == 0
        _, header, rows = read_csv(out)
        below = rows[:, header.index("mc_outage_r0.5")]
        above = rows[:, header.index("mc_outage_r1.6")]
        assert below[-1] <= below[0] + 1e-12
        assert above[-1] >= 0.99

    def test_fig6_dependent_curve_not_below_independent(self, tmp_path):
        out6 = tmp_path / "fig6.csv"
        out5 = tmp_path / "fig5.csv"
        args = ["--trials", "40000", "--seed", "7", "--N-list", "10,25,50"]
        assert run(tmp_path, "reproduce-fig", "6", *args, "--out", str(out6)) == 0
        assert run(tmp_path, "reproduce-fig", "5", *args, "--out", str(out5)) == 0
        _, h6, dep = read_csv(out6)
        _, h5, ind = read_csv(out5)
        col = h5.index("mc_outage_r0.5")
        assert np.all(dep[:, h6.index("mc_outage_r0.5")] >= ind[:, col] - 1e-12)

    def test_fig7_comparison_columns(self, tmp_path):
        out = tmp_path / "fig7.csv"
        assert run(tmp_path, "reproduce-fig", "7", "--trials", "20000", "--seed", "7",
                   "--N-list", "10,25", "--out", str(out)) == 0
        _, header, rows = read_csv(out)
        assert header == ["N", "mc_independent", "mc_mdependent"]
        assert np.all(rows[:, 2] >= rows[:, 1] - 1e-12)

    def test_fig8_exponent_ordering(self, tmp_path):
        out = tmp_path / "fig8.csv"
        assert run(tmp_path, "reproduce-fig", "8", "--out", str(out)) == 0
        _, header, rows = read_csv(out)
        ind = rows[:, header.index("exponent_indep")]
        dep = rows[:, header.index("exponent_mdep_bound")]
        assert np.all(ind >= dep - 1e-12)
        # larger mean attack time gives a larger exponent at fixed t
        t_col, l_col = header.index("t"), header.index("inv_lambda")
        for t in (0.2, 0.3):
            sel = rows[np.isclose(rows[:, t_col], t)]
            by_lambda = sel[np.argsort(sel[:, l_col]), header.index("exponent_indep")]
            assert np.all(np.diff(by_lambda) > 0)

    def test_invalid_figure_id(self, tmp_path):
        assert run(tmp_path, "reproduce-fig", "9") == 2

    def test_gnuplot_script_emitted(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run(tmp_path, "single-bounds", "--K-max", "3", "--out", str(out),
                   "--gnuplot") == 0
        assert (tmp_path / "b.csv.gp").exists()
