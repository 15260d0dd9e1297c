"""Config handling, CSV ingestion, experiment outputs and exit codes."""

import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from rieszmc.cli import (
    bundled_prices_path,
    format_float,
    load_config,
    load_prices_csv,
    main,
    run_experiment,
)
from rieszmc.errors import (
    ConfigError,
    DataError,
    EmptyFile,
    MissingColumn,
    NonPositivePrice,
)

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "docs"
     / "summary.schema.json").read_text())


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _summary(out_dir: Path) -> dict:
    return json.loads((out_dir / "summary.json").read_text())


class TestLoadPricesCsv:
    def test_flat_price_zero_return(self, tmp_path):
        path = _write(tmp_path, "p.csv",
                      "date,close\n2020-01-01,100\n2020-01-02,100\n")
        series = load_prices_csv(path)
        assert series.log_returns.tolist() == [0.0]
        assert series.dates == ["2020-01-02"]

    def test_ten_percent_move(self, tmp_path):
        path = _write(tmp_path, "p.csv",
                      "date,close\n2020-01-01,100\n2020-01-02,110\n")
        series = load_prices_csv(path)
        assert series.log_returns[0] == pytest.approx(math.log(1.1),
                                                      rel=1e-12)

    def test_bundled_file_telescopes(self):
        series = load_prices_csv(bundled_prices_path())
        assert len(series.log_returns) == 251
        closes = []
        for line in bundled_prices_path().read_text().splitlines()[1:]:
            closes.append(float(line.split(",")[1]))
        want = math.log(closes[-1] / closes[0])
        assert series.log_returns.sum() == pytest.approx(want, abs=1e-12)

    def test_crlf_and_case_insensitive_header(self, tmp_path):
        path = _write(tmp_path, "p.csv",
                      "Date,CLOSE\r\n2020-01-01,100\r\n2020-01-02,105\r\n")
        series = load_prices_csv(path)
        assert len(series.log_returns) == 1

    def test_extra_columns_allowed(self, tmp_path):
        path = _write(tmp_path, "p.csv",
                      "open,date,close\n99,2020-01-01,100\n"
                      "101,2020-01-02,105\n")
        assert len(load_prices_csv(path).log_returns) == 1

    def test_missing_columns(self, tmp_path):
        with pytest.raises(MissingColumn):
            load_prices_csv(_write(tmp_path, "a.csv",
                                   "date,price\n2020-01-01,1\n"))
        with pytest.raises(MissingColumn):
            load_prices_csv(_write(tmp_path, "b.csv",
                                   "day,close\n2020-01-01,1\n"))

    def test_non_positive_price_reports_row(self, tmp_path):
        path = _write(tmp_path, "p.csv",
                      "date,close\n2020-01-01,100\n2020-01-02,-3\n")
        with pytest.raises(NonPositivePrice, match="row 3"):
            load_prices_csv(path)

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFile):
            load_prices_csv(_write(tmp_path, "e.csv", ""))
        with pytest.raises(EmptyFile):
            load_prices_csv(_write(tmp_path, "h.csv", "date,close\n"))

    def test_bad_date_rejected(self, tmp_path):
        path = _write(tmp_path, "p.csv",
                      "date,close\n01/02/2020,100\n01/03/2020,101\n")
        with pytest.raises(DataError):
            load_prices_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_prices_csv(tmp_path / "nope.csv")

    def test_returns_roundtrip_17_digits(self):
        series = load_prices_csv(bundled_prices_path())
        rendered = [format_float(v) for v in series.log_returns]
        back = np.array([float(v) for v in rendered])
        assert np.max(np.abs(back - series.log_returns)) <= 1e-15


class TestLoadConfig:
    def test_defaults(self):
        cfg = load_config("generate-points")
        assert cfg.experiment == "generate-points"
        assert cfg.seed == 0
        assert cfg.options["n_points"] == 200

    def test_file_merge_and_overrides(self, tmp_path):
        path = _write(tmp_path, "c.json", json.dumps({
            "experiment": "filter-lgss",
            "seed": 12,
            "T": 30,
            "model": {"phi": 0.5},
        }))
        cfg = load_config("filter-lgss", path, seed=99, output_dir="odir")
        assert cfg.seed == 99                      # CLI flag wins
        assert cfg.options["T"] == 30
        assert cfg.options["model"]["phi"] == 0.5
        assert cfg.options["model"]["sigma_v"] == 1.0   # default preserved
        assert cfg.output_dir == Path("odir")

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            load_config("nope")

    def test_experiment_mismatch(self, tmp_path):
        path = _write(tmp_path, "c.json",
                      json.dumps({"experiment": "pmh-sv"}))
        with pytest.raises(ConfigError):
            load_config("filter-lgss", path)

    def test_unknown_keys(self, tmp_path):
        path = _write(tmp_path, "c.json", json.dumps({"bogus": 1}))
        with pytest.raises(ConfigError):
            load_config("filter-lgss", path)

    def test_invalid_json(self, tmp_path):
        path = _write(tmp_path, "c.json", "{not json")
        with pytest.raises(ConfigError):
            load_config("filter-lgss", path)


class TestRunExperiment:
    def test_generate_points_outputs(self, tmp_path):
        cfg = load_config("generate-points", seed=3,
                          output_dir=tmp_path / "out")
        cfg.options["n_points"] = 40
        assert run_experiment(cfg) == 0
        out = tmp_path / "out"
        assert (out / "results.csv").is_file()
        assert (out / "plotdata" / "qq.csv").is_file()
        summary = _summary(out)
        jsonschema.validate(summary, SCHEMA)
        rows = (out / "plotdata" / "qq.csv").read_text().splitlines()
        assert len(rows) == 41  # header + one pair per point

    def test_all_experiments_validate_against_schema(self, tmp_path):
        small = {
            "generate-points": {"n_points": 25},
            "diagnostics": {"n_values": [10, 20]},
            "filter-lgss": {"T": 15, "n_values": [10, 20], "n_seeds": 2},
            "pmh-lgss": {"T": 10, "iterations": 40, "burn_in": 10,
                         "n_particles": 20, "n_riesz": 10},
            "pmh-sv": {"iterations": 30, "burn_in": 5, "n_particles": 30,
                       "n_riesz": 10},
        }
        for name, tweaks in small.items():
            cfg = load_config(name, seed=1, output_dir=tmp_path / name)
            cfg.options.update(tweaks)
            assert run_experiment(cfg) == 0, name
            summary = _summary(tmp_path / name)
            jsonschema.validate(summary, SCHEMA)
            assert (tmp_path / name / "results.csv").is_file()

    def test_numerical_failure_exit_code(self, tmp_path, capsys):
        cfg = load_config("generate-points", seed=0,
                          output_dir=tmp_path / "out")
        cfg.options["n_points"] = 3
        cfg.options["quantile_mapped"] = False
        cfg.options["target"] = "uniform"
        cfg.options["riesz"]["eps_dist"] = 0.6
        cfg.options["sampler"]["max_retries"] = 2
        assert run_experiment(cfg) == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "BudgetExhausted"
        assert err["exit_code"] == 4

    def test_missing_input_exit_code(self, tmp_path, capsys):
        cfg = load_config("pmh-sv", seed=0, output_dir=tmp_path / "out")
        cfg.input_path = tmp_path / "missing.csv"
        assert run_experiment(cfg) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["exit_code"] == 3

    def test_pmh_lgss_step_size_sweep_reports_acf(self, tmp_path):
        cfg = load_config("pmh-lgss", seed=4, output_dir=tmp_path / "out")
        cfg.options.update({"T": 10, "iterations": 60, "burn_in": 20,
                            "step_sizes": [0.05, 0.1, 0.5],
                            "n_particles": 20, "n_riesz": 10})
        assert run_experiment(cfg) == 0
        acf_lines = (tmp_path / "out" / "plotdata"
                     / "acf.csv").read_text().splitlines()
        seen = {line.split(",")[0] for line in acf_lines[1:]}
        assert seen == {"0.050000000000000003", "0.10000000000000001",
                        "0.5"}
        summary = _summary(tmp_path / "out")
        assert len(summary["results"]["chains"]) == 3
        for chain in summary["results"]["chains"]:
            assert 0.0 <= chain["acceptance_rate"] <= 1.0

    def test_pmh_sv_on_custom_csv(self, tmp_path):
        rng = np.random.default_rng(0)
        closes = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(40)))
        lines = ["date,close"]
        from datetime import date, timedelta
        d = date(2021, 1, 4)
        for c in closes:
            lines.append(f"{d.isoformat()},{c:.4f}")
            d += timedelta(days=1)
        path = _write(tmp_path, "prices.csv", "\n".join(lines) + "\n")
        cfg = load_config("pmh-sv", seed=2, output_dir=tmp_path / "out")
        cfg.input_path = path
        cfg.options.update({"iterations": 25, "burn_in": 5,
                            "n_particles": 25, "n_riesz": 10})
        assert run_experiment(cfg) == 0
        vol = (tmp_path / "out" / "plotdata" / "volatility.csv")
        assert len(vol.read_text().splitlines()) == 40  # header + 39 returns


class TestMain:
    def test_bad_config_exit_2(self, tmp_path, capsys):
        path = _write(tmp_path, "c.json", "{broken")
        with pytest.raises(SystemExit) as exc:
            main(["generate-points", "--config", str(path)])
        assert exc.value.code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["exit_code"] == 2

    def test_success_run(self, tmp_path):
        cfg_path = _write(tmp_path, "c.json",
                          json.dumps({"n_points": 20}))
        with pytest.raises(SystemExit) as exc:
            main(["generate-points", "--config", str(cfg_path),
                  "--seed", "5", "--output", str(tmp_path / "out")])
        assert exc.value.code == 0
        assert (tmp_path / "out" / "summary.json").is_file()
        assert _summary(tmp_path / "out")["seed"] == 5

    def test_repeated_runs_byte_identical(self, tmp_path):
        cfg_path = _write(tmp_path, "c.json", json.dumps({"n_points": 30}))
        outs = []
        for name in ("a", "b"):
            with pytest.raises(SystemExit) as exc:
                main(["generate-points", "--config", str(cfg_path),
                      "--seed", "7", "--output", str(tmp_path / name)])
            assert exc.value.code == 0
            outs.append((tmp_path / name / "results.csv").read_bytes())
        assert outs[0] == outs[1]
