import json

import numpy as np
import pytest

from spt.cli import ConfigError, main, parse_grid


class TestGridParsing:
    def test_linear(self):
        assert np.allclose(parse_grid("0:4:5"), [0, 1, 2, 3, 4])

    def test_log(self):
        g = parse_grid("log:0.01:1:3")
        assert np.allclose(g, [0.01, 0.1, 1.0])

    def test_bare_log_autocenter(self):
        g = parse_grid("log", auto_center=0.1)
        assert g[0] == pytest.approx(0.01)
        assert g[-1] == pytest.approx(1.0)
        assert len(g) == 41

    def test_bad_grids(self):
        for bad in ("1:2", "a:b:c", "log:-1:2:5", "1:2:0"):
            with pytest.raises(ConfigError):
                parse_grid(bad)


class TestExperiments:
    def test_setting_rate_csv(self, tmp_path):
        out = tmp_path / "sr.csv"
        rc = main(["setting-rate", "--kappa2-grid", "1:3:3", "--n2", "6",
                   "-o", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header.split(",") == ["kappa2", "gamma_set_numeric", "gamma_set_analytic_1",
                                     "gamma_set_analytic_2", "gamma_set_analytic_3"]
        row = [ln for ln in lines if not ln.startswith("#")][2].split(",")
        assert float(row[0]) == 2.0
        assert float(row[1]) == pytest.approx(0.00324800896068134, rel=1e-9)

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["setting-rate", "--kappa2-grid", "1:2:4", "--n2", "5", "--seed", "3"]
        assert main(args + ["-o", str(a)]) == 0
        assert main(args + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_detection_json_point(self, tmp_path, capsys):
        rc = main(["detection", "--gain-photons", "200", "--modes", "90",
                   "--zeta", "2", "-o", "-"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["efficiency"] == pytest.approx(0.954, abs=1e-3)
        assert payload["dark_probability"] == pytest.approx(0.0228, abs=1e-4)

    def test_detection_roc_contains_reference_row(self, tmp_path):
        out = tmp_path / "roc.csv"
        rc = main(["detection", "--gain-photons", "200", "--modes", "90",
                   "--zeta-grid", "0:4:41", "-o", str(out)])
        assert rc == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()
                if ln and not ln.startswith("#")][1:]
        by_zeta = {float(r[0]): (float(r[1]), float(r[2])) for r in rows}
        eff, dark = by_zeta[2.0]
        assert eff == pytest.approx(0.954, abs=1e-3)
        assert dark == pytest.approx(0.0228, abs=1e-4)

    def test_trajectories_json(self, tmp_path):
        out = tmp_path / "stats.json"
        log = tmp_path / "jumps.csv"
        rc = main(["trajectories", "--g1", "0.25", "--n-traj", "20",
                   "--duration", "400", "--n1", "1", "--n2", "10",
                   "--seed", "5", "-o", str(out), "--jump-log", str(log)])
        assert rc == 0
        payload = json.loads(out.read_text())
        for key in ("n_traj", "mean", "variance", "g2_zero_mandel",
                    "g2_zero_paper_sign", "histogram"):
            assert key in payload
        assert payload["n_traj"] == 20
        assert log.read_text().splitlines()[0].startswith("#")

    def test_mhz_units(self, tmp_path):
        # real-structure inputs: g1 = 6 MHz at g2 = 120 MHz -> g1/g2 = 0.05
        out = tmp_path / "sr.csv"
        rc = main(["setting-rate", "--units", "mhz", "--g2-mhz", "120",
                   "--g1", "6", "--omega", "240", "--kappa2-grid", "120:120:1",
                   "--n2", "6", "-o", str(out)])
        assert rc == 0
        row = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][1]
        k2, gs = float(row.split(",")[0]), float(row.split(",")[1])
        assert k2 == pytest.approx(1.0)
        assert gs == pytest.approx(0.004941, abs=2e-5)

    def test_config_file_compose_and_flags_win(self, tmp_path):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"kappa2-grid": "1:1:1", "n2": 4, "g1": 0.08}))
        out = tmp_path / "sr.csv"
        rc = main(["--config", str(conf), "setting-rate", "--g1", "0.05",
                   "-o", str(out)])
        assert rc == 0
        meta = {ln.split("=")[0][2:]: ln.split("=", 1)[1]
                for ln in out.read_text().splitlines() if ln.startswith("#")}
        assert meta["g1"] == "0.05"     # flag beats config
        assert meta["n2"] == "4"        # config fills the rest

    def test_unknown_config_key_is_config_error(self, tmp_path):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"bogus": 1}))
        assert main(["--config", str(conf), "setting-rate"]) == 2

    def test_bad_grid_exit_code(self):
        assert main(["setting-rate", "--kappa2-grid", "nope"]) == 2

    def test_mhz_without_reference_is_config_error(self):
        assert main(["setting-rate", "--units", "mhz"]) == 2

    def test_numerical_failure_exit_code(self):
        # omega = 0 closes the Raman channel: the closed forms raise
        assert main(["setting-rate", "--omega", "0", "--kappa2-grid", "1:1:1"]) == 3

    def test_reflection_small_sweep(self, tmp_path):
        out = tmp_path / "refl.csv"
        rc = main(["reflection", "--g1", "0.05", "--kappa2", "2",
                   "--kappa1-grid", "log:0.001:0.01:3", "--n2", "6",
                   "--n2-reflection", "5", "-o", str(out)])
        assert rc == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()
                if ln and not ln.startswith("#")][1:]
        assert len(rows) == 3
        for r in rows:
            assert 0.0 <= float(r[1]) <= 1.0
            # numeric tracks the closed form away from the dip
            assert float(r[1]) == pytest.approx(float(r[2]), abs=0.05)

    def test_gain_sweep(self, tmp_path):
        out = tmp_path / "gain.csv"
        rc = main(["gain", "--sweep", "g1", "0.15:0.3:2", "--kappa2", "1",
                   "--n2", "6", "-o", str(out)])
        assert rc == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()
                if ln and not ln.startswith("#")][1:]
        assert len(rows) == 2
        # bandwidth grows with g1, gain falls
        assert float(rows[1][2]) > float(rows[0][2])
        assert float(rows[1][1]) < float(rows[0][1])

    def test_pulse_response_waveform(self, tmp_path):
        out = tmp_path / "wave.csv"
        rc = main(["pulse-response", "--g1", "0.25", "--tau-kappa1", "5",
                   "--points", "160", "--n2", "6", "--tol", "1e-6",
                   "-o", str(out)])
        assert rc == 0
        from spt.dynamics import TimeSeries

        ts = TimeSeries.from_csv(out)
        assert float(ts.metadata["absorbed_fraction"]) > 0.9
        # input Gaussian followed by a slow output tail
        t_in_peak = ts.times[np.argmax(ts.channels["I_in1"])]
        t_out_peak = ts.times[np.argmax(ts.channels["I_out2"])]
        assert t_out_peak > t_in_peak

    def test_dark_counts_sweep(self, tmp_path):
        out = tmp_path / "dark.csv"
        rc = main(["dark-counts", "--g1", "0.2", "--kappa2", "0.1",
                   "--anharmonicity", "50", "--a-grid", "40:50:2",
                   "--trajectories", "10", "--duration", "500",
                   "-o", str(out)])
        assert rc == 0
        lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
        header = lines[0].split(",")
        assert header[:3] == ["anharmonicity", "single_inversion", "enhanced_inversion"]
        assert "single_trajectory" in header
        assert len(lines) == 3

    def test_dark_counts_requires_finite_A(self):
        assert main(["dark-counts", "--g1", "0.2"]) == 2
