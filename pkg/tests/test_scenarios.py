import json

import pytest
import yaml

from kerrsqueezer import InconsistentObservationError, ValidationError
from kerrsqueezer.cli import main
from kerrsqueezer.scenarios import (
    default_config_path,
    infer_report,
    load_config,
    run_scenario,
    validate_config,
)


def small_fig3_config():
    config = load_config(default_config_path("fig3"))
    config["fig3"] = dict(
        config["fig3"],
        sweep={"start_c": 20.0, "stop_c": 88.0, "points": 69},
        profile_points=601,
        profile_span_linewidths=6.0,
    )
    return config


@pytest.fixture(scope="module")
def fig3_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig3")
    summary = run_scenario(small_fig3_config(), out, seed=1)
    return out, summary


@pytest.fixture(scope="module")
def fig5_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig5")
    config = load_config(default_config_path("fig5"))
    summary = run_scenario(config, out, seed=1)
    return out, summary


class TestValidation:
    @pytest.mark.parametrize("scenario", ["fig3", "fig4", "fig5"])
    def test_shipped_defaults_are_valid(self, scenario):
        data = yaml.safe_load(default_config_path(scenario).read_text())
        assert validate_config(data) == []

    def test_out_of_range_field_named(self):
        data = yaml.safe_load(default_config_path("fig3").read_text())
        data["cavity"]["coupler_transmission"] = 1.2
        diagnostics = validate_config(data)
        assert any(d.startswith("cavity.coupler_transmission:") for d in diagnostics)

    def test_missing_section_named(self):
        data = yaml.safe_load(default_config_path("fig3").read_text())
        del data["crystal"]
        diagnostics = validate_config(data)
        assert any(d.startswith("crystal.") for d in diagnostics)

    def test_parse_error_has_location(self, tmp_path):
        bad = tmp_path / "broken.yaml"
        bad.write_text("scenario: fig3\n  bad_indent: [1, 2\n")
        with pytest.raises(ValidationError) as err:
            load_config(bad)
        assert "line" in str(err.value
                             )

    def test_run_rejects_invalid(self, tmp_path):
        config = small_fig3_config()
        config["cavity"]["round_trip_loss"] = 2.0
        with pytest.raises(ValidationError):
            run_scenario(config, tmp_path)


class TestFig3:
    def test_extrema_report(self, fig3_run):
        _, summary = fig3_run
        kinds = {round(e["T_celsius"], 3): e["kind"] for e in summary["extrema"]}
        assert kinds[40.5] == "max"
        assert kinds[61.2] == "min"
        assert kinds[81.9] == "min"
        assert summary["first_minimum_c"] == pytest.approx(61.2, abs=1e-9)

    def test_profile_asymmetries(self, fig3_run):
        _, summary = fig3_run
        by_temp = {p["temperature_c"]: p for p in summary["profiles"]}
        assert abs(by_temp[40.5]["asymmetry"]) < 1e-9
        assert by_temp[61.2]["asymmetry"] > 0.3

    def test_more_power_more_asymmetry(self, tmp_path):
        def profiles_at(p_in, out):
            config = small_fig3_config()
            config["scenario"] = "custom"
            config["custom"] = {"tasks": ["profiles"]}
            config["fig3"] = dict(config["fig3"], profile_temperatures_c=[61.2],
                                  input_power_w=p_in)
            return run_scenario(config, out)["profiles"]["profiles"][0]

        high = profiles_at(0.07, tmp_path / "hi")
        low = profiles_at(0.0088, tmp_path / "lo")
        assert high["asymmetry"] > low["asymmetry"]

    def test_csv_schemas(self, fig3_run):
        out, _ = fig3_run
        assert (out / "conversion_sweep.csv").read_text().splitlines()[0] == (
            "T_celsius,delta_k,shg_efficiency"
        )
        profile = next(out.glob("profile_*.csv"))
        assert profile.read_text().splitlines()[0] == "detuning_rad,p_circ_W,p_trans_W"

    def test_manifest_hashes(self, fig3_run):
        import hashlib

        out, _ = fig3_run
        manifest = (out / "manifest").read_text().splitlines()
        assert manifest[0].startswith("artifact: kerrsqueezer")
        listed = dict(
            line.strip().split(": sha256=") for line in manifest if "sha256=" in line
        )
        for name, digest in listed.items():
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


class TestFig4:
    def test_summary_hits_targets(self, tmp_path):
        config = load_config(default_config_path("fig4"))
        summary = run_scenario(config, tmp_path)
        assert summary["summary_db"]["squeeze"] == pytest.approx(2.4, abs=0.1)
        assert summary["summary_db"]["antisqueeze"] == pytest.approx(7.5, abs=0.1)
        assert summary["calibration"]["sigma_rad"] > 0.0
        assert summary["pump_ratio"] < 1.0

    def test_loss_only_variant(self, tmp_path):
        config = load_config(default_config_path("fig4"))
        config["fig4"] = dict(config["fig4"], mode="loss-only")
        summary = run_scenario(config, tmp_path)
        assert summary["calibration"]["eta_total"] == pytest.approx(0.467, abs=5e-4)
        assert summary["calibration"]["sigma_rad"] == 0.0
        assert summary["summary_db"]["squeeze"] == pytest.approx(2.4, abs=0.1)

    def test_pure_reference_case(self, tmp_path):
        # Unit budget and no jitter: summary dB pair collapses to the source.
        config = load_config(default_config_path("fig4"))
        config["budget"] = {
            "escape": [1.0, 0.0],
            "omc_transmission": [1.0, 0.0],
            "shg_residual": [1.0, 0.0],
            "bhd_efficiency": [1.0, 0.0],
            "visibility": 1.0,
            "visibility_in_bhd": True,
        }
        config["fig4"] = dict(config["fig4"], targets_db=[3.0, 3.0])
        summary = run_scenario(config, tmp_path)
        assert summary["calibration"]["sigma_rad"] == pytest.approx(0.0, abs=1e-7)
        assert summary["summary_db"]["squeeze"] == pytest.approx(3.0, abs=0.05)
        assert summary["summary_db"]["antisqueeze"] == pytest.approx(3.0, abs=0.05)

    def test_byte_identical_reruns(self, tmp_path):
        config = load_config(default_config_path("fig4"))
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_scenario(config, a, seed=7)
        run_scenario(config, b, seed=7)
        for name in ("trace_vacuum.csv", "trace_squeezed.csv", "summary.json", "manifest"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_trace_schema(self, tmp_path):
        config = load_config(default_config_path("fig4"))
        run_scenario(config, tmp_path, seed=2)
        header = (tmp_path / "trace_squeezed.csv").read_text().splitlines()[0]
        assert header == "t_seconds,theta_rad,measured_dB"


class TestFig5:
    def test_peak_at_first_minimum(self, fig5_run):
        _, summary = fig5_run
        assert summary["peak_at_first_minimum"]
        assert summary["best"]["temperature_c"] == pytest.approx(61.2)
        assert summary["comb_index"] == 1
        assert summary["comb_offset_rad_s"] == pytest.approx(0.0, abs=1e-6)

    def test_conversion_maximum_flagged_and_quiet(self, fig5_run):
        _, summary = fig5_run
        at_peak = next(r for r in summary["rows"] if r["temperature_c"] == 40.5)
        assert at_peak["outside_spm_regime"]
        assert abs(at_peak["squeeze_db"]) < 0.05

    def test_minima_sequence_decreases(self, fig5_run):
        # Cascade phase falls like 1/(2 pi m) across the conversion zeros.
        _, summary = fig5_run
        rows = {r["temperature_c"]: r for r in summary["rows"]}
        assert rows[61.2]["squeeze_db"] > rows[81.9]["squeeze_db"] > 0
        assert rows[61.2]["antisqueeze_db"] > rows[81.9]["antisqueeze_db"]

    def test_all_below_threshold(self, fig5_run):
        _, summary = fig5_run
        assert not any(r["above_threshold"] for r in summary["rows"])

    def test_sweep_and_spectrum_schema(self, fig5_run):
        out, _ = fig5_run
        header = (out / "squeeze_sweep.csv").read_text().splitlines()[0]
        assert header.startswith("T_celsius,delta_k,residual_conversion,round_trip_loss")
        spec_header = (out / "spectrum.csv").read_text().splitlines()[0]
        assert spec_header == "f_Hz,vmin_dB,vmax_dB,theta_rad"

    def test_json_format(self, tmp_path):
        config = load_config(default_config_path("fig5"))
        config["fig5"] = dict(config["fig5"], temperatures_c=[57.5, 61.2, 65.0],
                              spectrum_points=11)
        run_scenario(config, tmp_path, fmt="json")
        payload = json.loads((tmp_path / "squeeze_sweep.json").read_text())
        assert payload["columns"][0] == "T_celsius"
        assert len(payload["rows"]) == 3


class TestCustom:
    def test_task_subset(self, tmp_path):
        config = small_fig3_config()
        config["scenario"] = "custom"
        config["custom"] = {"tasks": ["conversion_sweep"]}
        summary = run_scenario(config, tmp_path)
        assert "conversion_sweep" in summary
        assert (tmp_path / "conversion_sweep.csv").exists()
        assert not list(tmp_path.glob("profile_*.csv"))


class TestInferReports:
    def test_loss_only(self):
        report = infer_report("loss-only", squeeze_db=2.4, antisqueeze_db=7.5)
        assert 0.46 <= report["eta"] <= 0.48
        assert report["forward_check_db"]["squeeze"] == pytest.approx(2.4, abs=1e-9)

    def test_budget(self):
        report = infer_report(
            "budget", factors=[0.84, 0.89, 0.98, 0.90], sigmas=[0.02, 0.01, 0.01, 0.04]
        )
        assert report["total"]["value"] == pytest.approx(0.659, abs=1e-3)
        assert report["total"]["sigma"] == pytest.approx(0.0347, abs=1e-3)

    def test_phase_noise(self):
        report = infer_report("phase-noise", squeeze_db=2.0, antisqueeze_db=9.5, eta=0.66)
        assert report["sigma_rad"] > 0.0
        assert report["residual_db"] < 1e-6

    def test_impossible_pair(self):
        with pytest.raises(InconsistentObservationError):
            infer_report("loss-only", squeeze_db=3.0, antisqueeze_db=2.0)


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        path = tmp_path / "ok.yaml"
        path.write_text(yaml.safe_dump(small_fig3_config()))
        assert main(["validate", "--config", str(path)]) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_validate_bad_exit_1(self, tmp_path, capsys):
        config = small_fig3_config()
        config["cavity"]["coupler_transmission"] = 1.2
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(config))
        assert main(["validate", "--config", str(path)]) == 1
        assert "cavity.coupler_transmission" in capsys.readouterr().err

    def test_infer_inconsistent_exit_3(self, capsys):
        assert main(["infer", "loss-only", "--sqz", "3", "--antisqz", "2"]) == 3

    def test_infer_loss_only_stdout(self, capsys):
        assert main(["infer", "loss-only", "--sqz", "2.4", "--antisqz", "7.5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert 0.46 <= report["eta"] <= 0.48

    def test_infer_budget_writes_report(self, tmp_path, capsys):
        code = main(
            ["infer", "budget", "0.84", "0.89", "0.98", "0.90",
             "--unc", "0.02", "0.01", "0.01", "0.04", "--out", str(tmp_path)]
        )
        assert code == 0
        report = json.loads((tmp_path / "infer_budget.json").read_text())
        assert abs(report["total"]["value"] - 0.66) < 0.05

    def test_run_with_config_and_seed(self, tmp_path, capsys):
        config = small_fig3_config()
        config["fig3"] = dict(config["fig3"], profile_temperatures_c=[40.5])
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(config))
        out = tmp_path / "out"
        code = main(["run", "fig3", "--config", str(path), "--seed", "9",
                     "--out", str(out)])
        assert code == 0
        assert (out / "manifest").read_text().splitlines()[2] == "seed: 9"

    def test_run_scenario_mismatch(self, tmp_path, capsys):
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(small_fig3_config()))
        assert main(["run", "fig4", "--config", str(path)]) == 1

    def test_usage_error_exit_1(self, capsys):
        assert main(["run", "not-a-scenario"]) == 1

    def test_extrema_flags(self, capsys):
        code = main(["extrema", "--t-max", "40.5", "--t-min1", "61.2",
                     "--length", "0.0093", "--range", "20", "88"])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        temps = {round(e["T_celsius"], 1): e["kind"] for e in report["extrema"]}
        assert temps[61.2] == "min" and temps[81.9] == "min" and temps[40.5] == "max"
