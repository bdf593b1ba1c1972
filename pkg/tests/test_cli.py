import os

import pytest

from pmleak.cli import CSV_HEADER, main
from pmleak.config import parse_config, parse_config_text
from pmleak.keyrate import secret_key_rate

BASE_CFG = "[budget]\nmu_out = 1e-6\n"


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def report_value(out, key):
    for line in out.splitlines():
        if line.startswith(key + " = "):
            return line.split(" = ", 1)[1]
    raise KeyError(f"{key!r} not in report:\n{out}")


class TestCoinCommand:
    def test_default_report(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE_CFG)
        assert main(["coin", "--config", cfg]) == 0
        out = capsys.readouterr().out
        delta = float(report_value(out, "delta"))
        assert 4.0e-7 <= delta <= 6.5e-7
        assert float(report_value(out, "distance_km")) == 50.0
        assert float(report_value(out, "mu_out_eff")) == 1e-6

    def test_zero_budget(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 0.0\n")
        assert main(["coin", "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert float(report_value(out, "delta")) == 0.0
        assert float(report_value(out, "F")) == 1.0

    def test_zero_sigma_gaussian_matches_ideal(self, tmp_path, capsys):
        ideal = write_cfg(tmp_path, BASE_CFG, "ideal.cfg")
        gauss = write_cfg(
            tmp_path,
            BASE_CFG + "[prep]\nkind = gaussian\nphi_sigma = 0.0\ntheta_sigma = 0.0\n",
            "gauss.cfg",
        )
        assert main(["coin", "--config", ideal]) == 0
        d_ideal = float(report_value(capsys.readouterr().out, "delta"))
        assert main(["coin", "--config", gauss]) == 0
        d_gauss = float(report_value(capsys.readouterr().out, "delta"))
        # states agree to one ulp; ~1e-12 slack in F is matrix-sqrt noise
        assert d_gauss == pytest.approx(d_ideal, abs=1e-10)

    def test_finite_mode_inflates_budget(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE_CFG)
        assert main(["coin", "--config", cfg, "--mode", "finite"]) == 0
        out = capsys.readouterr().out
        assert float(report_value(out, "mu_out_eff")) > 1e-6

    def test_vacuous_warning(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 0.9\n")
        assert main(["coin", "--config", cfg]) == 0
        captured = capsys.readouterr()
        assert "vacuous" in captured.err
        assert float(report_value(captured.out, "e1_phase")) == 0.5

    def test_out_file_round_trips_config(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG)
        out_path = str(tmp_path / "coin.csv")
        assert main(["coin", "--config", cfg_path, "--out", out_path]) == 0
        capsys.readouterr()
        lines = open(out_path).read().splitlines()
        echo = [ln[2:] for ln in lines if ln.startswith("# ")]
        data = [ln for ln in lines if not ln.startswith("# ")]
        assert parse_config_text("\n".join(echo)) == parse_config(cfg_path)
        assert data[0].split(",")[0] == "distance_km"
        assert len(data) == 2

    def test_analysis_abort_exit_code(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "[budget]\nmu_out = 0.99\n[protocol]\nn_pulses = 1e4\n[run]\nmode = finite\n",
        )
        assert main(["coin", "--config", cfg]) == 3
        assert "analysis abort" in capsys.readouterr().err


class TestKeyrateCommand:
    def test_csv_contract(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG)
        out_path = str(tmp_path / "rates.csv")
        assert main(["keyrate", "--config", cfg_path, "--out", out_path]) == 0
        capsys.readouterr()
        lines = open(out_path).read().splitlines()
        data = [ln for ln in lines if not ln.startswith("# ")]
        assert data[0] == CSV_HEADER
        # default grid: 0..130 km in 5 km steps
        assert len(data) == 1 + 27
        assert data[1].split(",")[0] == "0"

    def test_rows_match_library(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG + "[sweep]\ndistances = 50\n")
        out_path = str(tmp_path / "rates.csv")
        assert main(["keyrate", "--config", cfg_path, "--out", out_path]) == 0
        capsys.readouterr()
        data = [
            ln for ln in open(out_path).read().splitlines() if not ln.startswith("# ")
        ]
        row = data[1].split(",")
        cfg = parse_config(cfg_path)
        pt = secret_key_rate(cfg.channel, cfg.protocol, cfg.budget, cfg.prep, 50.0)
        # .17g round-trips float64 exactly
        assert float(row[1]) == pt.gain_signal
        assert float(row[4]) == pt.y1_lower
        assert float(row[7]) == pt.delta
        assert float(row[9]) == pt.rate
        assert float(row[10]) == pt.rate_per_click

    def test_rerun_byte_identical(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG + "[sweep]\nstart = 0\nstop = 20\nstep = 5\n")
        out_path = str(tmp_path / "rates.csv")
        assert main(["keyrate", "--config", cfg_path, "--out", out_path, "--no-plot"]) == 0
        first = open(out_path, "rb").read()
        assert main(["keyrate", "--config", cfg_path, "--out", out_path, "--no-plot"]) == 0
        capsys.readouterr()
        assert open(out_path, "rb").read() == first

    def test_figure_written_by_default(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG + "[sweep]\ndistances = 0, 25, 50\n")
        out_path = str(tmp_path / "rates.csv")
        assert main(["keyrate", "--config", cfg_path, "--out", out_path]) == 0
        out = capsys.readouterr().out
        fig = str(tmp_path / "rates.png")
        assert os.path.exists(fig)
        assert "rates.png" in out

    def test_no_plot_skips_figure(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG + "[sweep]\ndistances = 0, 25\n")
        out_path = str(tmp_path / "rates.csv")
        assert main(["keyrate", "--config", cfg_path, "--out", out_path, "--no-plot"]) == 0
        capsys.readouterr()
        assert not os.path.exists(str(tmp_path / "rates.png"))

    def test_missing_directory_is_io_error(self, tmp_path, capsys):
        cfg_path = write_cfg(tmp_path, BASE_CFG)
        out_path = str(tmp_path / "no_such_dir" / "rates.csv")
        assert main(["keyrate", "--config", cfg_path, "--out", out_path]) == 4
        assert "i/o error" in capsys.readouterr().err
        assert not os.path.exists(out_path)
        assert not os.path.exists(out_path + ".tmp")


class TestConfigErrors:
    def test_unknown_key_named(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE_CFG + "[channel]\nbogus = 1\n")
        assert main(["coin", "--config", cfg]) == 2
        assert "[channel] bogus" in capsys.readouterr().err

    def test_unknown_section_named(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, BASE_CFG + "[eve]\npower = 9000\n")
        assert main(["coin", "--config", cfg]) == 2
        assert "[eve]" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["coin", "--config", str(tmp_path / "absent.cfg")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_budget_required(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[run]\nseed = 1\n")
        assert main(["coin", "--config", cfg]) == 2
        assert "mu_out" in capsys.readouterr().err


class TestBoundsCommand:
    def test_upper_report(self, capsys):
        assert main(["bounds", "--x", "1e6", "--epsilon", "1e-10"]) == 0
        out = capsys.readouterr().out
        delta = float(report_value(out, "delta_numeric"))
        assert delta == pytest.approx(0.006793811375431268, rel=1e-9)
        assert float(report_value(out, "cross_check")) < 1e-9
        assert float(report_value(out, "residual")) < 1e-10
        assert float(report_value(out, "bound_value")) == pytest.approx(
            1e6 * (1 + delta), rel=1e-15
        )

    def test_lower_report(self, capsys):
        assert main(["bounds", "--x", "1e6", "--epsilon", "1e-10", "--side", "lower"]) == 0
        out = capsys.readouterr().out
        delta = float(report_value(out, "delta_numeric"))
        assert 0 < delta < 1
        assert float(report_value(out, "residual")) < 1e-10

    def test_lower_clamp_warns(self, capsys):
        assert main(["bounds", "--x", "10", "--epsilon", "1e-10", "--side", "lower"]) == 0
        captured = capsys.readouterr()
        assert "clamps to 0" in captured.err
        assert report_value(captured.out, "delta_numeric") == "none"
        assert float(report_value(captured.out, "bound_value")) == 0.0

    def test_bad_query_is_config_error(self, capsys):
        assert main(["bounds", "--x", "-5", "--epsilon", "1e-10"]) == 2
        capsys.readouterr()


class TestValidateCommand:
    def test_battery_passes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 1e-3\n")
        assert main(["validate", "--config", cfg, "--pulses", "1e6"]) == 0
        out = capsys.readouterr().out
        assert "overall: PASS" in out
        assert out.count("PASS") >= 5

    def test_boosted_mean_fails(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 1e-3\n")
        assert (
            main(["validate", "--config", cfg, "--pulses", "1e6", "--boost-mean"]) == 5
        )
        assert "overall: FAIL" in capsys.readouterr().out

    def test_deterministic_given_seed(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 1e-3\n")
        assert main(["validate", "--config", cfg, "--pulses", "1e5"]) == 0
        first = capsys.readouterr().out
        assert main(["validate", "--config", cfg, "--pulses", "1e5"]) == 0
        assert capsys.readouterr().out == first

    def test_seed_override(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 1e-3\n")
        assert main(["validate", "--config", cfg, "--pulses", "1e5", "--seed", "7"]) == 0
        assert "seed = 7" in capsys.readouterr().out

    def test_zero_budget_rejected(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[budget]\nmu_out = 0.0\n")
        assert main(["validate", "--config", cfg, "--pulses", "1e5"]) == 2
        capsys.readouterr()


class TestShippedConfigs:
    def test_default_config_parses(self):
        cfg = parse_config("configs/default.cfg")
        assert cfg.budget.mu_out == 1e-6
        assert cfg.mode == "asymptotic"
        assert cfg.distances[0] == 0.0 and cfg.distances[-1] == 130.0

    def test_imperfect_config_parses(self):
        cfg = parse_config("configs/imperfect.cfg")
        assert cfg.prep.phi_sigma == (0.1624, 0.05, 0.1624, 0.05)
