"""CLI contract: config round-trip, file formats, determinism, exit codes."""

import json

import numpy as np
import pytest

from polystab.cli import TRACE_HEADER, main
from polystab.config import ExperimentConfig, build_init, build_system
from polystab.errors import ConfigError


def write_config(path, payload):
    path.write_text(json.dumps(payload, indent=2))
    return str(path)


def base_trace_config(**scheme):
    scheme_block = {"dt": 0.05, "t_final": 2.0, "solve_tol": 1e-13}
    scheme_block.update(scheme)
    return {
        "system": {"type": "coupled_waves", "alpha": 0.5, "gamma": 1.0, "k_max": 8},
        "scheme": scheme_block,
        "init": {"kind": "random", "seed": 7},
        "output": {"prefix": "t"},
    }


class TestConfig:
    def test_round_trip_identity(self):
        cfg = ExperimentConfig.from_dict(base_trace_config())
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert again == cfg
        assert again.to_dict() == cfg.to_dict()

    def test_unknown_keys_rejected(self):
        bad = base_trace_config()
        bad["system"]["coupling"] = 2.0
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"systems": {}})

    def test_missing_dt_rejected(self):
        bad = base_trace_config()
        del bad["scheme"]["dt"]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(bad)

    def test_custom_system_and_mode_range(self):
        cfg = ExperimentConfig.from_dict(
            {
                "system": {"type": "custom", "eta": [1.0, 4.0],
                           "damp_gram": [[0.5, 0.0], [0.0, 0.5]]},
                "scheme": {"dt": 0.1},
                "init": {"kind": "single_mode", "mode": 1},
            }
        )
        sys_ = build_system(cfg.system)
        assert sys_.n == 2
        st = build_init(cfg.init, sys_)
        assert st.a[1] == 1.0
        cfg.init.mode = 5
        with pytest.raises(ConfigError):
            build_init(cfg.init, sys_)


class TestTraceCommand:
    def test_csv_contract_and_determinism(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", base_trace_config())
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert main(["trace", "--config", cfg_path, "--out", str(out1)]) == 0
        assert main(["trace", "--config", cfg_path, "--out", str(out2)]) == 0
        csv1 = (out1 / "t_trace.csv").read_bytes()
        csv2 = (out2 / "t_trace.csv").read_bytes()
        assert csv1 == csv2
        lines = csv1.decode().splitlines()
        assert lines[0] == TRACE_HEADER
        # l = floor(2.0/0.05) = 40 steps + 1 -> rows k = 0..41
        assert len(lines) == 1 + 42
        assert csv1.endswith(b"\n")
        # floats round-trip at 17 significant digits
        row = lines[1].split(",")
        assert len(row) == 8
        float(row[2])
        summary = json.loads((out1 / "t_summary.json").read_text())
        assert summary["identity_ok"] is True
        assert summary["E0"] > summary["E_final"] > 0.0
        assert (out2 / "t_summary.json").read_bytes() == (out1 / "t_summary.json").read_bytes()

    def test_identity_column_bounded(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", base_trace_config())
        main(["trace", "--config", cfg_path, "--out", str(tmp_path)])
        lines = (tmp_path / "t_trace.csv").read_text().splitlines()[1:]
        rows = [line.split(",") for line in lines]
        e0 = float(rows[0][2])
        for row in rows:
            assert float(row[7]) <= 10.0 * 1e-13 * e0

    def test_conservative_run_energy_constant(self, tmp_path):
        payload = base_trace_config(viscosity=False, damping=False)
        cfg_path = write_config(tmp_path / "c.json", payload)
        main(["trace", "--config", cfg_path, "--out", str(tmp_path)])
        lines = (tmp_path / "t_trace.csv").read_text().splitlines()[1:]
        E = np.array([float(line.split(",")[2]) for line in lines])
        assert np.max(np.abs(E - E[0])) <= 1e-12 * E[0]

    def test_seed_override_changes_data(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", base_trace_config())
        main(["trace", "--config", cfg_path, "--out", str(tmp_path / "a")])
        main(["trace", "--config", cfg_path, "--out", str(tmp_path / "b"), "--seed", "99"])
        assert (tmp_path / "a" / "t_trace.csv").read_bytes() != (
            tmp_path / "b" / "t_trace.csv"
        ).read_bytes()


class TestExitCodes:
    def test_malformed_json_exits_2(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["trace", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_invalid_config_exits_2(self, tmp_path):
        p = write_config(tmp_path / "c.json", {"system": {"type": "nope"},
                                               "scheme": {"dt": 0.1}})
        assert main(["spectrum", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["trace", "--config", str(tmp_path / "none.json"),
                     "--out", str(tmp_path)]) == 2

    def test_numerical_blowup_exits_3(self, tmp_path):
        payload = {
            "system": {"type": "custom", "eta": [1e300]},
            "scheme": {"dt": 1e100, "t_final": 2e100, "damping": False},
            "init": {"kind": "single_mode", "mode": 0},
        }
        p = write_config(tmp_path / "c.json", payload)
        with np.errstate(all="ignore"):
            assert main(["trace", "--config", str(p), "--out", str(tmp_path)]) == 3

    def test_unwritable_output_exits_1(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", base_trace_config())
        target = tmp_path / "blocked"
        target.write_text("file, not a directory")
        assert main(["trace", "--config", cfg_path, "--out", str(target)]) == 1


class TestSpectrumCommand:
    def test_coupled_report_fields(self, tmp_path):
        payload = {
            "system": {"type": "coupled_waves", "alpha": 1.0, "gamma": 1.0, "k_max": 16},
            "scheme": {"dt": 0.01},
            "output": {"prefix": "s"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["spectrum", "--config", str(p), "--out", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "s_spectrum.json").read_text())["report"]
        assert rep["min_pairwise_gap"] < 0.05
        assert rep["weak_gap_2"] > 3.0
        assert rep["cluster_theta_hat"] > 0.4
        assert len(rep["mu"]) == 32 and len(rep["bstar_norms"]) == 32
        assert rep["delta0"] is not None

    def test_boundary_report_residuals(self, tmp_path):
        payload = {
            "system": {"type": "boundary_coupled_waves", "alpha": 0.5, "gamma": 1.0,
                       "k_max": 8},
            "scheme": {"dt": 0.01},
            "output": {"prefix": "s"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["spectrum", "--config", str(p), "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "s_spectrum.json").read_text())
        assert max(data["fixedpoint_residuals"]) <= 1e-12

    def test_custom_system_echo_round_trips(self, tmp_path):
        payload = {
            "system": {"type": "custom", "eta": [1.0, 2.5, 9.0]},
            "scheme": {"dt": 0.1},
            "output": {"prefix": "s"},
        }
        p = write_config(tmp_path / "c.json", payload)
        main(["spectrum", "--config", str(p), "--out", str(tmp_path)])
        data = json.loads((tmp_path / "s_spectrum.json").read_text())
        assert data["config"]["system"]["eta"] == [1.0, 2.5, 9.0]
        np.testing.assert_allclose(data["report"]["mu"], np.sqrt([1.0, 2.5, 9.0]))


class TestDecayCommand:
    def test_gamma_zero_verdict(self, tmp_path):
        payload = {
            "system": {"type": "coupled_waves", "alpha": 0.5, "gamma": 0.0, "k_max": 8},
            "scheme": {"dt_list": [0.05, 0.02], "t_final": 60.0},
            "study": {"t_star": 8.0, "T": 60.0},
            "output": {"prefix": "d"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["decay", "--config", str(p), "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "d_decay.json").read_text())
        assert data["study"]["verdict"] == "non-uniform"

    def test_synthetic_self_test_echoes_exponent(self, tmp_path):
        payload = {
            "system": {"type": "coupled_waves", "k_max": 2},
            "scheme": {"dt": 0.01, "t_final": 50.0},
            "study": {"synthetic_exponent": 1.0},
            "output": {"prefix": "d"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["decay", "--config", str(p), "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "d_decay.json").read_text())
        assert data["self_test"]["exponent_fit"] == pytest.approx(1.0, abs=1e-10)
        assert data["self_test"]["M_hat"] == pytest.approx(1.0, rel=1e-10)

    def test_verdict_field_enumeration(self, tmp_path):
        payload = {
            "system": {"type": "coupled_waves", "alpha": 0.5, "gamma": 1.0, "k_max": 8},
            "scheme": {"dt_list": [0.05], "t_final": 60.0},
            "study": {"T": 60.0},
            "output": {"prefix": "d"},
        }
        p = write_config(tmp_path / "c.json", payload)
        main(["decay", "--config", str(p), "--out", str(tmp_path)])
        data = json.loads((tmp_path / "d_decay.json").read_text())
        assert data["study"]["verdict"] in ("uniform", "non-uniform", "inconclusive")
        assert data["study"]["verdict"] == "uniform"


class TestObservabilityCommand:
    def test_report_fields_per_dt(self, tmp_path):
        payload = {
            "system": {"type": "coupled_waves", "alpha": 0.5, "gamma": 1.0, "k_max": 8},
            "scheme": {"dt_list": [0.05, 0.02]},
            "study": {"trials": 10, "seed": 2, "delta": 1.0},
            "output": {"prefix": "o"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["observability", "--config", str(p), "--out", str(tmp_path),
                     "--threads", "2"]) == 0
        study = json.loads((tmp_path / "o_observability.json").read_text())["study"]
        assert study["gamma"] > 0 and study["gamma1"] > 0
        assert study["delta"] == 1.0
        for cell in study["cells"]:
            assert cell["t_star"] > 0
            assert cell["cutoff"] == pytest.approx(1.0 / cell["dt"])
            assert cell["min_ratio"] > 0.0

    def test_zero_damping_viscosity_only(self, tmp_path):
        payload = {
            "system": {"type": "coupled_waves", "alpha": 0.5, "gamma": 0.0, "k_max": 4},
            "scheme": {"dt": 0.05},
            "study": {"trials": 5, "seed": 0, "t_star": 2.0},
            "output": {"prefix": "o"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["observability", "--config", str(p), "--out", str(tmp_path)]) == 0
        study = json.loads((tmp_path / "o_observability.json").read_text())["study"]
        assert study["cells"][0]["min_ratio"] > 0.0  # viscosity terms only


class TestInghamCommand:
    def test_self_test_and_seed_echo(self, tmp_path):
        payload = {
            "system": {"type": "boundary_coupled_waves", "alpha": 0.5, "gamma": 1.0,
                       "k_max": 8},
            "scheme": {"dt": 0.01},
            "study": {"trials": 50, "seed": 21},
            "output": {"prefix": "i"},
        }
        p = write_config(tmp_path / "c.json", payload)
        assert main(["ingham", "--config", str(p), "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "i_ingham.json").read_text())
        assert data["seed"] == 21
        assert data["self_test"]["ratio"] == pytest.approx(
            data["self_test"]["expected"], rel=1e-13
        )
        assert data["scalar"]["estimate"]["c_lo"] > 0.0
        assert data["clustered"]["estimate"]["c_lo"] > 0.0

    def test_clustered_vs_scalar_comparison(self, tmp_path):
        lows = {}
        for k_max in (8, 32):
            payload = {
                "system": {"type": "coupled_waves", "alpha": 1.0, "gamma": 1.0,
                           "k_max": k_max},
                "scheme": {"dt": 0.01},
                # force the gamma1-scale sampling for the scalar estimate too
                "study": {"trials": 100, "seed": 3, "gamma": 1.5},
                "output": {"prefix": f"i{k_max}"},
            }
            p = write_config(tmp_path / f"c{k_max}.json", payload)
            assert main(["ingham", "--config", str(p), "--out", str(tmp_path)]) == 0
            data = json.loads((tmp_path / f"i{k_max}_ingham.json").read_text())
            lows[k_max] = (
                data["scalar"]["estimate"]["c_lo"],
                data["clustered"]["estimate"]["c_lo"],
            )
        assert lows[8][0] > 10.0 * lows[32][0]
        assert lows[32][1] > 0.5
