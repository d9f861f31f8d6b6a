import json

import pytest

import detfield as df
from detfield.cli import main
from detfield.config import parse_config
from detfield.errors import ParseError, ValidationError
from detfield.reporting import read_contract_csv

MINIMAL = """
kernel.spectral = named("sine", rho=0.5)
statistic.family = indicator
statistic.a = 0.0
statistic.b = 1.0
grid.L = [16, 32]
mc.n_samples = 200
mc.base_seed = 99
"""


class TestParseConfig:
    def test_minimal_config_fills_defaults(self):
        spec = parse_config(MINIMAL)
        assert spec.window_factor == 16.0
        assert spec.cumulant_orders == 4
        assert spec.L_grid == (16.0, 32.0)
        assert spec.base_seed == 99
        assert isinstance(spec.spectral, df.IntervalUnion)

    def test_intervals_form(self):
        spec = parse_config(MINIMAL.replace(
            'named("sine", rho=0.5)', "intervals([[-0.25, 0.25]])"))
        assert spec.spectral.intervals == ((-0.25, 0.25),)

    def test_csv_path_form(self, tmp_path):
        curve = tmp_path / "curve.csv"
        curve.write_text("-0.5,0.0\n0.0,1.0\n0.5,0.0\n")
        spec = parse_config(MINIMAL.replace(
            'named("sine", rho=0.5)', str(curve)))
        assert isinstance(spec.spectral, df.Tabulated)

    def test_overlapping_intervals_name_the_key(self):
        bad = MINIMAL.replace('named("sine", rho=0.5)',
                              "intervals([[0.0, 0.2], [0.1, 0.3]])")
        with pytest.raises(ValidationError) as err:
            parse_config(bad)
        assert any("kernel.spectral" in m for m in err.value.messages)

    def test_decreasing_grid_rejected(self):
        with pytest.raises(ValidationError) as err:
            parse_config(MINIMAL.replace("[16, 32]", "[32, 16]"))
        assert any("grid.L" in m for m in err.value.messages)

    def test_unknown_key_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_config(MINIMAL + "bogus.key = 3\n")
        assert any("bogus.key" in m and "line" in m for m in err.value.messages)

    def test_logspace_lambda_grid(self):
        spec = parse_config(MINIMAL + "grid.lambdas = logspace(1e-2, 1e-4, 8)\n")
        assert len(spec.lambda_grid) == 8
        assert spec.lambda_grid[0] == pytest.approx(1e-2)


class TestCliRuns:
    def run_cli(self, tmp_path, config_text, subcommand, *extra):
        conf = tmp_path / "run.conf"
        conf.write_text(config_text)
        out = tmp_path / "out"
        code = main([subcommand, "--config", str(conf), "--out", str(out),
                     *extra])
        return code, out

    def test_clt_run_happy_path(self, tmp_path):
        code, out = self.run_cli(tmp_path, MINIMAL, "clt-run")
        assert code == 0
        meta, columns, rows = read_contract_csv(out / "clt_run.csv")
        assert meta["schema"] == "clt-run-v1"
        assert "config_sha256" in meta and meta["seed"] == "99"
        assert columns == ["L", "n_sites", "exact_mean", "exact_var", "c3_norm",
                           "c4_norm", "emp_mean", "emp_var", "emp_skew",
                           "emp_kurt", "ks_dist", "n_samples", "seed"]
        assert len(rows) == 2
        summary = json.loads((out / "clt_run_summary.json").read_text())
        assert summary["verdict"]["status"] in ("PASS", "INCONCLUSIVE")
        samples = read_contract_csv(out / "clt_run_samples.csv")
        assert samples[0]["schema"] == "samples-v1"
        assert len(samples[2]) == 200

    def test_byte_identical_reruns(self, tmp_path):
        code1, out1 = self.run_cli(tmp_path, MINIMAL, "clt-run")
        conf2 = tmp_path / "again"
        conf2.mkdir()
        code2, out2 = self.run_cli(conf2, MINIMAL, "clt-run")
        assert code1 == code2 == 0
        assert (out1 / "clt_run.csv").read_bytes() == \
               (out2 / "clt_run.csv").read_bytes()
        assert (out1 / "clt_run_samples.csv").read_bytes() == \
               (out2 / "clt_run_samples.csv").read_bytes()

    def test_seed_override_recorded(self, tmp_path):
        code, out = self.run_cli(tmp_path, MINIMAL, "clt-run", "--seed", "777")
        assert code == 0
        meta, _, rows = read_contract_csv(out / "clt_run.csv")
        assert meta["seed"] == "777"
        assert rows[0][-1] == "777"

    def test_inadmissible_symbol_exits_2(self, tmp_path):
        bad = MINIMAL.replace('named("sine", rho=0.5)',
                              'named("flat", value=1.2)')
        code, out = self.run_cli(tmp_path, bad, "validate-kernel")
        assert code == 2
        summary = json.loads(
            (out / "validate_kernel_summary.json").read_text())
        assert summary["exit_code"] == 2

    def test_config_error_exits_1(self, tmp_path):
        code, _ = self.run_cli(tmp_path, MINIMAL.replace("[16, 32]", "[32, 16]"),
                               "clt-run")
        assert code == 1

    def test_numerical_error_exits_3(self, tmp_path):
        degenerate = MINIMAL.replace('named("sine", rho=0.5)',
                                     'named("flat", value=1.0)')
        code, _ = self.run_cli(tmp_path, degenerate, "clt-run")
        assert code == 3

    def test_validate_kernel_reports_spectrum(self, tmp_path):
        code, out = self.run_cli(tmp_path, MINIMAL, "validate-kernel")
        assert code == 0
        summary = json.loads(
            (out / "validate_kernel_summary.json").read_text())
        assert summary["kernel"]["eig_max"] <= 1.0
        assert summary["spectral_report"]["total_mass"] == pytest.approx(0.5)

    def test_exact_stats_csv(self, tmp_path):
        code, out = self.run_cli(tmp_path, MINIMAL, "exact-stats")
        assert code == 0
        meta, columns, rows = read_contract_csv(out / "exact_stats.csv")
        assert meta["schema"] == "exact-stats-v1"
        assert len(rows) == 2

    def test_sample_subcommand_serializes_configurations(self, tmp_path):
        config = MINIMAL.replace("mc.n_samples = 200", "mc.n_samples = 5") \
            + "kernel.n_sites = 64\n"
        code, out = self.run_cli(tmp_path, config, "sample")
        assert code == 0
        lines = (out / "samples.csv").read_text().splitlines()
        data = [l for l in lines if not l.startswith("#")]
        assert len(data) == 5
        for line in data:
            cfg = df.Configuration.from_csv_line(line)
            assert cfg.seed == 99
            assert len(cfg.occupied_sites) <= 64

    def test_variance_scan_headers_carry_fits(self, tmp_path):
        config = MINIMAL.replace("[16, 32]", "[32, 64, 128, 256, 512]")
        code, out = self.run_cli(tmp_path, config, "variance-scan")
        assert code == 0
        meta, _, rows = read_contract_csv(out / "variance_scan.csv")
        assert meta["schema"] == "variance-scan-v1"
        assert "fit_var_vs_logL_slope" in meta
        assert "reference_log_slope" in meta
        assert len(rows) == 5

    def test_m_scan_outputs(self, tmp_path):
        config = MINIMAL + "grid.lambdas = logspace(1e-2, 1e-4, 12)\n"
        code, out = self.run_cli(tmp_path, config, "m-scan")
        assert code == 0
        meta, _, rows = read_contract_csv(out / "m_scan.csv")
        assert meta["schema"] == "m-scan-v1"
        assert float(meta["alpha_hat"]) == pytest.approx(1.0, abs=0.02)
        assert len(rows) == 12

    def test_theorem2_run_csv(self, tmp_path):
        config = """
kernel.spectral = named("triangle")
statistic.family = gaussian
grid.L = [16, 24, 32]
mc.n_samples = 300
mc.base_seed = 4
"""
        code, out = self.run_cli(tmp_path, config, "theorem2-run")
        assert code == 0
        meta, columns, rows = read_contract_csv(out / "theorem2_run.csv")
        assert meta["schema"] == "theorem2-run-v1"
        assert columns[-3:] == ["centering", "centering_discrepancy",
                                "emp_var_white"]
        assert len(rows) == 3

    def test_workers_do_not_change_bytes(self, tmp_path):
        config = """
kernel.spectral = named("triangle")
statistic.family = gaussian
grid.L = [12, 16]
mc.n_samples = 60
mc.base_seed = 4
"""
        _, out1 = self.run_cli(tmp_path, config, "theorem2-run")
        sub = tmp_path / "w2"
        sub.mkdir()
        _, out2 = self.run_cli(sub, config, "theorem2-run", "--workers", "2")
        assert (out1 / "theorem2_run.csv").read_bytes() == \
               (out2 / "theorem2_run.csv").read_bytes()
