from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmcurve import __version__
from rmcurve.cli import ConfigError, format_float, load_config, main, parse_config, run

SEMI = {"model": {"endpoints": [{"a": 0, "fraction": {"num": 1, "den": 1}}]}, "sampling": {"N": 100}}


def pair(a=1.0, n1=1, d1=2, n2=1, d2=2, **extra):
    doc = {
        "model": {
            "endpoints": [
                {"a": -a, "fraction": {"num": n1, "den": d1}},
                {"a": a, "fraction": {"num": n2, "den": d2}},
            ]
        }
    }
    doc.update(extra)
    return doc


def write(tmp_path, doc, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestConfig:
    def test_minimal_config_gets_defaults(self, tmp_path):
        cfg = load_config(write(tmp_path, SEMI))
        d = cfg.to_dict()
        assert d["sampling"] == {"N": 100, "draws": 200, "seed": 0, "bins": 100}
        assert d["analysis"]["convention"] == "paper"
        assert d["output"]["formats"] == ["csv", "json"]

    def test_fraction_sum(self, tmp_path):
        with pytest.raises(ConfigError, match="fractions sum"):
            load_config(write(tmp_path, pair(n2=1, d2=3)))

    def test_N_multiple(self, tmp_path):
        with pytest.raises(ConfigError, match="not a multiple of 3") as info:
            load_config(write(tmp_path, pair(n1=1, d1=3, n2=2, d2=3, sampling={"N": 50})))
        assert info.value.path == "sampling.N"

    def test_parse_error_position(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{"model":\n  [1, }', encoding="utf-8")
        with pytest.raises(ConfigError) as info:
            load_config(p)
        assert info.value.code == "PARSE_ERROR" and "line 2" in str(info.value)

    @pytest.mark.parametrize(
        "patch, path",
        [
            ({"time": {"t": 1.5}}, "time.t"),
            ({"time": {"grid": [0.5, 0.2]}}, "time.grid"),
            ({"sampling": {"draws": 0}}, "sampling.draws"),
            ({"analysis": {"convention": "other"}}, "analysis.convention"),
            ({"output": {"formats": ["xml"]}}, "output.formats"),
            ({"extra": 1}, "extra"),
        ],
    )
    def test_field_paths_reported(self, patch, path):
        with pytest.raises(ConfigError) as info:
            parse_config(pair(**patch))
        assert info.value.path == path

    def test_summary_is_accepted_as_config(self, tmp_path):
        assert main(["analyze", "--config", str(write(tmp_path, SEMI)), "--out", str(tmp_path / "o")]) == 0
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        again = load_config(tmp_path / "o" / "summary.json")
        assert again.to_dict() == summary["config"]

    def test_string_fractions(self):
        cfg = parse_config({"model": {"endpoints": [{"a": 0, "fraction": "1/2"}, {"a": 1, "fraction": "1/2"}]}})
        assert [e.fraction for e in cfg.endpoints] == [0.5, 0.5]


class TestFormat:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_round_trip(self, v):
        s = format_float(v)
        assert float(s) == v
        assert "E" not in s and "," not in s

    def test_lowercase_exponent(self):
        assert format_float(1e-20) == "9.9999999999999995e-21"


class TestCommands:
    def test_analyze_semicircle(self, tmp_path):
        assert main(["analyze", "--config", str(write(tmp_path, SEMI)), "--out", str(tmp_path)]) == 0
        res = json.loads((tmp_path / "summary.json").read_text())
        assert res["status"] == "ok" and res["version"] == __version__
        assert np.allclose(res["results"]["cuts"], [[-2, 2]], atol=1e-10)
        assert np.allclose(res["results"]["masses"], [1], atol=1e-8)
        header, rows = read_csv(tmp_path / "density.csv")
        assert header == ["x", "rho"]
        x = np.array([float(r[0]) for r in rows])
        rho = np.array([float(r[1]) for r in rows])
        assert np.allclose(rho, np.sqrt(np.clip(4 - x**2, 0, None)) / (2 * np.pi), atol=1e-12)

    def test_csv_round_trip_is_exact(self, tmp_path):
        from rmcurve.curve import density_profile, validate_spec

        main(["analyze", "--config", str(write(tmp_path, SEMI)), "--out", str(tmp_path)])
        prof = density_profile(validate_spec([0], ["1"]), 200)
        _, rows = read_csv(tmp_path / "density.csv")
        assert np.array_equal([float(r[0]) for r in rows], prof.grid)
        assert np.array_equal([float(r[1]) for r in rows], prof.rho)

    def test_evolve_finds_half(self, tmp_path):
        assert main(["evolve", "--config", str(write(tmp_path, pair(time={"t": 0.75}))), "--out", str(tmp_path)]) == 0
        (t,) = json.loads((tmp_path / "critical_times.json").read_text())
        assert abs(t - 0.5) < 1e-6
        header, rows = read_csv(tmp_path / "timeline.csv")
        assert header == ["t", "l"] and {r[1] for r in rows} == {"1", "2"}
        assert (tmp_path / "bridge_density.csv").exists()

    def test_degenerate_curve_exit_code(self, tmp_path):
        assert main(["analyze", "--config", str(write(tmp_path, pair())), "--out", str(tmp_path)]) == 2
        err = json.loads((tmp_path / "summary.json").read_text())["error"]
        assert err["code"] == "DEGENERATE_CURVE"

    def test_invalid_config_exit_code(self, tmp_path):
        code = main(["analyze", "--config", str(write(tmp_path, pair(n2=1, d2=3))), "--out", str(tmp_path)])
        assert code == 1
        err = json.loads((tmp_path / "summary.json").read_text())["error"]
        assert err["code"] == "INVALID_CONFIG" and err["path"] == "model.endpoints"

    def test_rh_check_unsupported_for_merged_cut(self, tmp_path):
        assert main(["rh-check", "--config", str(write(tmp_path, pair(a=0.5))), "--out", str(tmp_path)]) == 2
        assert json.loads((tmp_path / "summary.json").read_text())["error"]["code"] == "UNSUPPORTED_CONFIGURATION"

    def test_rh_check_two_cut(self, tmp_path):
        assert main(["rh-check", "--config", str(write(tmp_path, pair(a=2.0))), "--out", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "rh_report.json").read_text())
        assert rep["passed"] and rep["max_residual"] < 1e-7

    def test_sample(self, tmp_path):
        doc = pair(a=2.0, sampling={"N": 40, "draws": 20, "seed": 3, "bins": 30})
        assert main(["sample", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 0
        m = json.loads((tmp_path / "moments.json").read_text())
        assert m["trace_moments"]["expected_second"] == 5
        header, rows = read_csv(tmp_path / "histogram.csv")
        assert len(rows) == 30 and header[0] == "x_lo"

    def test_statistical_failure_exit_code(self, tmp_path):
        doc = dict(SEMI, sampling={"N": 100, "draws": 60}, analysis={"ks_threshold": 1e-6})
        assert main(["verify-bulk", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 3
        res = json.loads((tmp_path / "summary.json").read_text())
        assert res["error"]["code"] == "STATISTICAL_CHECK_FAILED" and (tmp_path / "spacings.csv").exists()

    def test_small_sample_exit_code(self, tmp_path):
        doc = dict(SEMI, sampling={"N": 100, "draws": 20})
        assert main(["verify-bulk", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 1
        assert json.loads((tmp_path / "summary.json").read_text())["error"]["code"] == "INSUFFICIENT_SAMPLE"

    def test_seed_override(self, tmp_path):
        doc = dict(SEMI, sampling={"N": 10, "draws": 2})
        main(["sample", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path), "--seed", "77"])
        assert json.loads((tmp_path / "summary.json").read_text())["config"]["sampling"]["seed"] == 77

    def test_json_only_output(self, tmp_path):
        doc = dict(SEMI, output={"formats": ["json"]})
        assert main(["analyze", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 0
        assert not (tmp_path / "density.csv").exists() and (tmp_path / "summary.json").exists()

    def test_run_rejects_unknown_command(self):
        with pytest.raises(ValueError):
            run("plot", parse_config(SEMI))

    def test_module_entry_point(self, tmp_path):
        cfg = write(tmp_path, SEMI)
        proc = subprocess.run(
            [sys.executable, "-m", "rmcurve", "analyze", "--config", str(cfg), "--out", str(tmp_path / "m")],
            capture_output=True,
            text=True,
            check=False,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "m" / "density.csv").exists()


class TestReproducibility:
    @pytest.mark.parametrize("command, files", [("verify-bulk", ["spacings.csv", "pair_correlation.csv"]), ("verify-edge", ["edge.csv"])])
    def test_rerun_from_summary_is_byte_identical(self, tmp_path, command, files):
        doc = dict(SEMI, sampling={"N": 100, "draws": 60, "seed": 12345}, analysis={"edge_tolerance": 10.0, "ks_threshold": 1.0})
        first, second = tmp_path / "first", tmp_path / "second"
        main([command, "--config", str(write(tmp_path, doc)), "--out", str(first)])
        main([command, "--config", str(first / "summary.json"), "--out", str(second)])
        for name in files:
            assert (first / name).read_bytes() == (second / name).read_bytes()
