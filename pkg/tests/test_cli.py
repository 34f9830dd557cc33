import csv
import json

import numpy as np
import pytest

from sbsim import cli
from sbsim.errors import ConfigError

from synth import eit_params, probe_grid, synthetic_spectrum

DEVICE_OBSERVED = {"observed": {"omega_t_hz": 6.8112e9, "omega_r_hz": 4.0755e9,
                                "a_t_hz": 150e6, "a_r_hz": 1646.7, "a_tr_hz": 497e3}}


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


class TestMatchingRun:
    def test_zero_drive_matching_row(self, tmp_path):
        cfg = {"kind": "matching", "device": DEVICE_OBSERVED,
               "amps_hz": [0.0], "interactions": ["bs", "tms"]}
        code = cli.run(cfg, tmp_path)
        assert code == 0
        header, rows = read_rows(tmp_path / "matching.csv")
        assert header == cli.PREDICTION_HEADER
        bs = [r for r in rows if r[0] == "bs"][0]
        tms = [r for r in rows if r[0] == "tms"][0]
        assert float(bs[-1]) == pytest.approx(1.36785e9, abs=1.0)
        assert float(tms[-1]) == pytest.approx(5.44335e9, abs=1.0)

    def test_byte_reproducible(self, tmp_path):
        cfg = {"kind": "matching", "device": DEVICE_OBSERVED,
               "amps_hz": [0.0, 1e8, 2e8], "interactions": ["bs", "tms"]}
        cli.run(cfg, tmp_path / "a")
        cli.run(cfg, tmp_path / "b")
        a = (tmp_path / "a" / "matching.csv").read_bytes()
        b = (tmp_path / "b" / "matching.csv").read_bytes()
        assert a == b


class TestAnalyticsTable:
    def test_rows_and_conditions(self, tmp_path):
        cfg = {"kind": "analytics-table", "device": DEVICE_OBSERVED,
               "drive": {"omega_d_hz": 5.4434e9, "amp_d_hz": 1e8}}
        assert cli.run(cfg, tmp_path) == 0
        header, rows = read_rows(tmp_path / "term_catalog.csv")
        assert header == cli.CATALOG_HEADER
        assert len(rows) == 8
        conditions = {r[0]: r[4] for r in rows}
        assert conditions["a b†"] == "|omega_t-omega_r|/2"
        assert conditions["a b†²"] == "|2omega_r-omega_t|"


class TestSpectrumRun:
    def test_missing_kappa_named(self, tmp_path):
        cfg = {"kind": "spectrum",
               "eit": {"gamma_hz": 1e5, "omega_r_hz": 4e9, "omega_sb_hz": 2e6,
                       "amp_p_hz": 1e4, "a_t_hz": 1.5e8, "a_r_hz": 1e3,
                       "a_tr_hz": 5e5, "delta_omega_mat_hz": 0.0},
               "probe_grid_hz": {"start": 4e9 - 1e7, "stop": 4e9 + 1e7, "num": 5}}
        with pytest.raises(ConfigError) as exc:
            cli.run(cfg, tmp_path)
        assert "kappa_hz" in str(exc.value)

    def test_spectrum_csv_header(self, tmp_path):
        cfg = {"kind": "spectrum",
               "eit": eit_params(dims=(3, 4)).to_dict(),
               "probe_grid_hz": {"start": 4.0755e9 - 1e7,
                                 "stop": 4.0755e9 + 1e7, "num": 11}}
        assert cli.run(cfg, tmp_path) == 0
        header, rows = read_rows(tmp_path / "spectrum.csv")
        assert header == cli.SPECTRUM_HEADER
        assert len(rows) == 11
        mags = [float(r[3]) for r in rows]
        assert max(mags) <= 1.0 + 1e-6

    def test_ladder_outputs(self, tmp_path):
        cfg = {"kind": "spectrum",
               "eit": eit_params(dims=(3, 4)).to_dict(),
               "omega_sb_values_hz": [2e6, 4e6],
               "probe_grid_hz": {"start": 4.0755e9 - 1e7,
                                 "stop": 4.0755e9 + 1e7, "num": 7}}
        assert cli.run(cfg, tmp_path) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["outputs"] == ["spectrum_00.csv", "spectrum_01.csv"]

    def test_invalid_kind(self, tmp_path):
        with pytest.raises(ConfigError):
            cli.run({"kind": "nonsense"}, tmp_path)


class TestFitRun:
    def test_fit_via_csv(self, tmp_path):
        truth = eit_params()
        spec = synthetic_spectrum(truth, noise=0.005, seed=2,
                                  grid=probe_grid(n_coarse=31, n_fine=31))
        data_path = tmp_path / "data.csv"
        cli.write_csv(data_path, cli.SPECTRUM_HEADER,
                      [[w, s.real, s.imag, abs(s)]
                       for w, s in zip(spec.omega_p_hz, spec.s21)])
        cfg = {"kind": "fit",
               "data_csv": str(data_path),
               "eit": truth.to_dict(),
               "free": [{"name": "omega_sb_hz", "guess": 2.2e6,
                         "lower": 0.5e6, "upper": 8e6}]}
        assert cli.run(cfg, tmp_path) == 0
        result = json.loads((tmp_path / "fit_result.json").read_text())
        est = {p["name"]: p["value_hz"] for p in result["parameters"]}
        assert est["omega_sb_hz"] == pytest.approx(2e6, rel=0.02)

    def test_csv_schema_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("omega_p_hz,s21_re\n1.0,2.0\n")
        with pytest.raises(ConfigError) as exc:
            cli.read_spectrum_csv(bad)
        assert "s21_im" in str(exc.value)


class TestTimedomainRun:
    @pytest.mark.slow
    def test_sweep_csv(self, tmp_path):
        cfg = {"kind": "timedomain",
               "device": {"circuit": {"omega_t0_hz": 6.8131e9, "omega_r0_hz": 4.0823e9,
                                      "g_hz": 120.7e6, "chi_t_hz": 137.4e6}},
               "dims": [4, 4],
               "interaction": "tms",
               "variant": "full",
               "drive": {"amp_d_hz": 3e8, "omega_d_hz": 5.4434e9},
               "lengths_s": {"start": 0.0, "stop": 2e-6, "num": 24}}
        code = cli.run(cfg, tmp_path)
        assert code in (0, 2)
        header, rows = read_rows(tmp_path / "sweep.csv")
        assert header == cli.SWEEP_HEADER
        assert len(rows) >= 20
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["dims"] == [4, 4]


class TestReproduce:
    def test_unknown_figure(self, tmp_path):
        with pytest.raises(ConfigError):
            cli.reproduce("fig99", tmp_path)

    def test_fig1f_bundle(self, tmp_path):
        # trimmed probe grid via direct config run would diverge from the
        # canned bundle; here we only check the canned config is well-formed
        cfg = cli.REPRODUCE_CONFIGS["fig1f"]
        assert cfg["omega_sb_values_hz"] == [2e6, 4e6, 6e6]
        assert cfg["kind"] == "spectrum"

    def test_main_entry(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        import yaml

        cfg_path.write_text(yaml.safe_dump({
            "kind": "matching", "device": DEVICE_OBSERVED,
            "amps_hz": [0.0], "interactions": ["bs"]}))
        code = cli.main(["run", "--config", str(cfg_path),
                         "--out", str(tmp_path / "out"), "--threads", "1"])
        assert code == 0
        assert (tmp_path / "out" / "manifest.json").exists()
