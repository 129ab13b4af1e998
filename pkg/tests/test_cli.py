import os

import numpy as np
import pytest

from conftest import DATA_DIR
from stbeam import cli, metrics
from stbeam.cli import (ConfigError, ResultRow, emit_csv, load_config,
                        main, parse_result_csv, run_experiment)


def write_config(tmp_path, text):
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    return str(path)


class TestLoadConfig:
    def test_empty_config_gives_default_network(self, tmp_path):
        spec = load_config(write_config(tmp_path, "# nothing here\n"))
        sc = spec.scenario
        assert sc.nx == 8 and sc.ny == 8
        assert sc.carrier_hz == 1.9925e9
        assert sc.bandwidth_hz == 5e6
        assert sc.altitude_m == 530e3
        assert sc.num_paths == 3
        assert sc.tap_gain_delta == 0.5
        assert sc.doppler_max_hz == 50e3
        assert sc.pathloss_exponent == 2.0

    def test_none_path_is_all_defaults(self):
        spec = load_config(None)
        assert spec.experiment == "single-run"
        assert spec.scenario.tx_power_dbm == 40.0

    def test_noise_power_derived_from_defaults(self):
        spec = load_config(None)
        sigma2 = spec.scenario.power().noise_w
        assert np.isclose(metrics.watts_to_dbm(sigma2), -107.0103,
                          atol=1e-3)

    def test_unknown_key_named(self, tmp_path):
        path = write_config(tmp_path, "transmit_power = 40\n")
        with pytest.raises(ConfigError, match="transmit_power"):
            load_config(path)

    def test_negative_power_named(self, tmp_path):
        path = write_config(tmp_path, "tx_power_dbm = -10\n")
        with pytest.raises(ConfigError, match="tx_power_dbm"):
            load_config(path)

    def test_bad_number_named(self, tmp_path):
        path = write_config(tmp_path, "carrier_ghz = fast\n")
        with pytest.raises(ConfigError, match="carrier_ghz"):
            load_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\nseed = 2\n")
        with pytest.raises(ConfigError, match="duplicate"):
            load_config(path)

    def test_unknown_scheme_rejected(self, tmp_path):
        path = write_config(tmp_path, "schemes = WMMSE\n")
        with pytest.raises(ConfigError, match="WMMSE"):
            load_config(path)

    def test_axis_must_increase(self, tmp_path):
        path = write_config(tmp_path,
                            "experiment = sweep-power\n"
                            "sweep_axis = 40, 30\n")
        with pytest.raises(ConfigError, match="strictly increasing"):
            load_config(path)

    def test_st_zf_on_full_topology_rejected_early(self, tmp_path):
        path = write_config(tmp_path,
                            "topology = full\nschemes = ST-ZF\n")
        with pytest.raises(ConfigError, match="partial"):
            load_config(path)

    def test_sweep_m_requires_st_slnr(self, tmp_path):
        path = write_config(tmp_path,
                            "experiment = sweep-m\nschemes = MRT\n"
                            "sweep_axis = 1,2,3\n")
        with pytest.raises(ConfigError, match="ST-SLNR"):
            load_config(path)

    def test_full_setup_parses(self, tmp_path):
        path = write_config(tmp_path, """
experiment = sweep-power
schemes = ST-ZF, TDMA, MRT
topology = partial
k_users = 3
sweep_axis = 30, 35, 40
trials = 50
seed = 9
tx_power_dbm = 37.5
fixed_m =            # empty means search
""")
        spec = load_config(path)
        assert spec.experiment == "sweep-power"
        assert spec.schemes == ["ST-ZF", "TDMA", "MRT"]
        assert spec.sweep_axis == [30.0, 35.0, 40.0]
        assert spec.scenario.trials == 50
        assert spec.scenario.fixed_m is None


class TestRunAndEmit:
    def _small_spec(self, **over):
        spec = load_config(None)
        spec.experiment = over.pop("experiment", "sweep-power")
        spec.schemes = over.pop("schemes", ["ST-ZF", "TDMA"])
        spec.sweep_axis = over.pop("sweep_axis", [35.0, 45.0])
        from dataclasses import replace
        spec.scenario = replace(spec.scenario, trials=40, seed=5,
                                r_max=64, **over)
        return spec

    def test_st_zf_rows_above_tdma(self):
        rows = run_experiment(self._small_spec())
        by = {(r.scheme, r.axis_value): r.mean_sum_se for r in rows}
        for p in (35.0, 45.0):
            assert by[("ST-ZF", p)] > by[("TDMA", p)]

    def test_rows_deterministic(self):
        a = run_experiment(self._small_spec())
        b = run_experiment(self._small_spec())
        assert a == b

    def test_csv_round_trip(self, tmp_path):
        rows = run_experiment(self._small_spec())
        path = str(tmp_path / "out.csv")
        emit_csv(rows, path)
        parsed = parse_result_csv(path)
        assert len(parsed) == len(rows)
        for got, want in zip(parsed, rows):
            assert got.scheme == want.scheme
            assert got.axis_value == want.axis_value
            assert np.isclose(got.mean_sum_se, want.mean_sum_se,
                              rtol=1e-5)
            assert got.trials == want.trials and got.seed == want.seed

    def test_empty_rows_header_only(self, tmp_path):
        path = str(tmp_path / "empty.csv")
        emit_csv([], path)
        assert open(path).read() == cli.CSV_HEADER + "\n"

    def test_six_significant_digits(self, tmp_path):
        rows = [ResultRow("single-run", "TDMA", "tx_power_dbm",
                          40.0, 1.2345678901, 0.000123456789, 10, 1)]
        path = str(tmp_path / "fmt.csv")
        emit_csv(rows, path)
        line = open(path).readlines()[1].strip()
        assert line == "single-run,TDMA,tx_power_dbm,40,1.23457," \
                       "0.000123457,10,1"


class TestMain:
    def test_run_writes_csv(self, tmp_path, capsys):
        out = str(tmp_path / "res.csv")
        cfg = write_config(tmp_path,
                           "schemes = TDMA\nk_users = 2\ntrials = 5\n")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        rows = parse_result_csv(out)
        assert len(rows) == 1 and rows[0].scheme == "TDMA"

    def test_exit_code_two_on_config_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "bogus_key = 1\n")
        assert main(["run", "--config", cfg]) == 2
        assert "config error" in capsys.readouterr().err

    def test_flag_overrides_trump_config_and_env(self, tmp_path):
        out1 = str(tmp_path / "a.csv")
        out2 = str(tmp_path / "b.csv")
        cfg = write_config(tmp_path,
                           "schemes = TDMA\nk_users = 2\ntrials = 4\n"
                           "seed = 1\n")
        os.environ[cli.SEED_ENV] = "2"
        try:
            assert main(["run", "--config", cfg, "--out", out1]) == 0
            assert main(["run", "--config", cfg, "--out", out2,
                         "--seed", "3"]) == 0
            rows1 = parse_result_csv(out1)
            rows2 = parse_result_csv(out2)
            assert rows1[0].seed == 2      # env beats config
            assert rows2[0].seed == 3      # flag beats env
        finally:
            del os.environ[cli.SEED_ENV]

    def test_byte_identical_across_worker_counts(self, tmp_path):
        cfg = write_config(tmp_path,
                           "schemes = ST-ZF, TDMA\nk_users = 3\n"
                           "trials = 12\nr_max = 64\n")
        outs = []
        for threads in ("1", "3"):
            out = str(tmp_path / f"t{threads}.csv")
            assert main(["run", "--config", cfg, "--out", out,
                         "--threads", threads]) == 0
            outs.append(open(out, "rb").read())
        assert outs[0] == outs[1]

    def test_sweep_m_peaks_at_configured_axis(self, tmp_path):
        out = str(tmp_path / "m.csv")
        cfg = write_config(tmp_path,
                           "schemes = ST-SLNR\ntopology = full\n"
                           "k_users = 2\ntrials = 6\nr_max = 64\n"
                           "sweep_axis = 1, 2, 3\n")
        assert main(["sweep-m", "--config", cfg, "--out", out]) == 0
        rows = parse_result_csv(out)
        assert [r.axis_value for r in rows] == [1.0, 2.0, 3.0]
        assert all(r.axis_name == "fixed_m" for r in rows)

    def test_tle_feasibility_end_to_end(self, tmp_path):
        out = str(tmp_path / "map.csv")
        cfg = write_config(tmp_path, f"""
experiment = tle-feasibility
tle_file = {DATA_DIR / 'golden.tle'}
tle_name = TESTSAT-000
tle_epoch_offset_s = 0
grid_lat_min_deg = -3
grid_lat_max_deg = 3
grid_lon_min_deg = -3
grid_lon_max_deg = 3
grid_step_deg = 1.0
ref_lat_deg = 0
ref_lon_deg = 0
min_elevation_deg = -90
""")
        assert main(["tle-feasibility", "--config", cfg,
                     "--out", out]) == 0
        lines = open(out).read().splitlines()
        assert lines[0].startswith("lat_deg,lon_deg")
        assert len(lines) == 50  # 7 x 7 grid + header

    def test_missing_tle_file_is_config_error(self, tmp_path, capsys):
        assert main(["tle-feasibility"]) == 2
        assert "tle_file" in capsys.readouterr().err
