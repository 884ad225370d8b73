"""Command-line behavior: strict config parsing, run outputs, exit codes."""

import json
from pathlib import Path

import pytest

from wegner_lab.cli import ConfigError, main, parse_run_config, resolved_ini
from wegner_lab.thick_sets import build_fat_cantor, load_raster, smith_volterra_spec

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


TINY_UNCERTAINTY = """\
[run]
experiment = uncertainty
seed = 0
mesh_density = 32

[parameters]
e_list = 25.0
l_list = 2.0
"""


@pytest.fixture(autouse=True)
def _no_out_override(monkeypatch):
    monkeypatch.delenv("WEGNER_LAB_OUT", raising=False)


class TestParseRunConfig:
    def test_defaults_fill_in(self, tmp_path):
        cfg = parse_run_config(_write(tmp_path / "r.ini", "[run]\nexperiment = uncertainty\n"))
        assert cfg.experiment == "uncertainty"
        assert cfg.seed == 0 and cfg.workers == 1
        assert cfg.replicas is None and cfg.mesh_density is None
        assert cfg.params["set_kind"] == "stripes"
        assert cfg.params["l_list"] == (2.0, 3.0, 4.0)

    def test_list_values_parse_to_tuples(self, tmp_path):
        text = "[run]\nexperiment = wegner\nreplicas = 4\n\n[parameters]\nl_list = 8, 16\n"
        cfg = parse_run_config(_write(tmp_path / "r.ini", text))
        assert cfg.params["l_list"] == (8.0, 16.0)
        assert cfg.replicas == 4

    def test_unknown_section_named(self, tmp_path):
        p = _write(tmp_path / "r.ini", "[run]\nexperiment = ise\n\n[extras]\nx = 1\n")
        with pytest.raises(ConfigError, match=r"unknown section \[extras\]"):
            parse_run_config(p)

    def test_unknown_run_key_named(self, tmp_path):
        p = _write(tmp_path / "r.ini", "[run]\nexperiment = ise\nthreads = 2\n")
        with pytest.raises(ConfigError, match="'threads'"):
            parse_run_config(p)

    def test_unknown_parameter_names_experiment(self, tmp_path):
        p = _write(tmp_path / "r.ini", "[run]\nexperiment = ise\n\n[parameters]\neps = 0.1\n")
        with pytest.raises(ConfigError, match="'eps'.*ise"):
            parse_run_config(p)

    def test_unparseable_value_reported(self, tmp_path):
        p = _write(tmp_path / "r.ini", "[run]\nexperiment = ids\n\n[parameters]\nl = wide\n")
        with pytest.raises(ConfigError, match="cannot parse l"):
            parse_run_config(p)

    def test_unknown_experiment_lists_known_ones(self, tmp_path):
        p = _write(tmp_path / "r.ini", "[run]\nexperiment = percolation\n")
        with pytest.raises(ConfigError, match="wegner"):
            parse_run_config(p)

    def test_missing_run_section(self, tmp_path):
        p = _write(tmp_path / "r.ini", "[parameters]\nl = 4\n")
        with pytest.raises(ConfigError, match=r"missing \[run\]"):
            parse_run_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_run_config(tmp_path / "absent.ini")

    def test_resolved_ini_round_trips(self, tmp_path):
        src = "[run]\nexperiment = wegner\nseed = 3\nreplicas = 5\n\n[parameters]\nl_list = 4,8\n"
        cfg = parse_run_config(_write(tmp_path / "a.ini", src))
        cfg2 = parse_run_config(_write(tmp_path / "b.ini", resolved_ini(cfg)))
        assert cfg2 == cfg

    def test_shipped_run_configs_parse(self):
        for name in ("wegner", "uncertainty", "ise", "stubborn"):
            cfg = parse_run_config(CONFIG_DIR / f"{name}.run.ini")
            assert cfg.experiment in name or cfg.experiment == name


class TestRunCommand:
    def test_model_free_run_writes_all_outputs(self, tmp_path, capsys):
        cfg = _write(tmp_path / "u.ini", TINY_UNCERTAINTY)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        for name in ("report.json", "records.csv", "summary.txt", "config.resolved.ini"):
            assert (out / name).exists(), name
        payload = json.loads((out / "report.json").read_text())
        assert payload["experiment"] == "uncertainty"
        assert "wall_clock_s" not in payload
        assert (out / "records.csv").read_text().startswith("# wegner-lab records v1")
        assert "uncertainty" in capsys.readouterr().out

    def test_machine_outputs_are_rerun_identical(self, tmp_path):
        cfg = _write(tmp_path / "u.ini", TINY_UNCERTAINTY)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(b)]) == 0
        for name in ("report.json", "records.csv", "config.resolved.ini"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_environment_overrides_out_flag(self, tmp_path, monkeypatch):
        cfg = _write(tmp_path / "u.ini", TINY_UNCERTAINTY)
        env_dir = tmp_path / "env_out"
        monkeypatch.setenv("WEGNER_LAB_OUT", str(env_dir))
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "flag_out")]) == 0
        assert (env_dir / "report.json").exists()
        assert not (tmp_path / "flag_out").exists()

    def test_model_run_from_shipped_files(self, tmp_path):
        text = (
            "[run]\nexperiment = wegner\nseed = 99\nreplicas = 4\n\n"
            "[parameters]\nl_list = 4\neps_list = 0.4\n"
        )
        cfg = _write(tmp_path / "w.ini", text)
        out = tmp_path / "out"
        rc = main(
            [
                "run",
                "--config",
                str(cfg),
                "--model",
                str(CONFIG_DIR / "covering.model.ini"),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["experiment"] == "wegner"
        assert payload["seed"] == 99

    def test_failing_verdict_exits_one(self, tmp_path, capsys):
        # exponential trapping cannot work on covering support; the report
        # says FAIL and the process says 1
        text = "[run]\nexperiment = stubborn-exp\nreplicas = 3\n"
        cfg = _write(tmp_path / "s.ini", text)
        out = tmp_path / "out"
        rc = main(
            [
                "run",
                "--config",
                str(cfg),
                "--model",
                str(CONFIG_DIR / "covering.model.ini"),
                "--out",
                str(out),
            ]
        )
        assert rc == 1
        assert json.loads((out / "report.json").read_text())["verdicts"] == {
            "persistent_eigenvalue": "FAIL"
        }

    def test_missing_model_is_a_config_error(self, tmp_path, capsys):
        cfg = _write(tmp_path / "w.ini", "[run]\nexperiment = wegner\n")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "needs a model file" in capsys.readouterr().err

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg = _write(tmp_path / "u.ini", "[run]\nexperiment = uncertainty\nbogus = 1\n")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_set_from_file_feeds_uncertainty(self, tmp_path):
        raster = tmp_path / "set.rast"
        assert main(
            ["make-set", "--kind", "stripes", "--width", "0.3333333333333333",
             "--period", "1.0", "--resolution", "48", "--out", str(raster)]
        ) == 0
        text = (
            "[run]\nexperiment = uncertainty\nmesh_density = 32\n\n"
            "[parameters]\ne_list = 25.0\nl_list = 2.0\nset_kind = file\nset_path = set.rast\n"
        )
        cfg = _write(tmp_path / "u.ini", text)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["fitted"]["gamma_certified"] == pytest.approx(1.0 / 3.0, rel=1e-12)


class TestMakeSet:
    def test_stripes_binary_round_trip(self, tmp_path, capsys):
        path = tmp_path / "stripes.rast"
        rc = main(
            ["make-set", "--kind", "stripes", "--width", "0.25", "--period", "1.0",
             "--resolution", "32", "--out", str(path)]
        )
        assert rc == 0
        assert "wrote" in capsys.readouterr().out
        S = load_raster(path)
        assert S.measure == pytest.approx(0.25, rel=1e-15)
        assert S.geometry.extent == (1.0,)

    def test_cantor_text_round_trip(self, tmp_path):
        path = tmp_path / "cantor.txt"
        rc = main(["make-set", "--kind", "cantor", "--depth", "2", "--resolution", "128",
                   "--out", str(path)])
        assert rc == 0
        S = load_raster(path)
        want = build_fat_cantor(smith_volterra_spec(2), 128)
        assert S.measure == want.measure
        assert S.cell_fraction == want.cell_fraction


class TestCertify:
    def _stripes_file(self, tmp_path):
        path = tmp_path / "s.rast"
        main(["make-set", "--kind", "stripes", "--width", "0.3333333333333333",
              "--period", "1.0", "--resolution", "48", "--out", str(path)])
        return path

    def test_raster_claim_certified(self, tmp_path, capsys):
        path = self._stripes_file(tmp_path)
        rc = main(["certify", "--raster", str(path), "--window", "1.0",
                   "--gamma", "0.3333333333333333"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "CERTIFIED" in out and "gamma_star" in out

    def test_raster_overclaim_refused(self, tmp_path, capsys):
        path = self._stripes_file(tmp_path)
        rc = main(["certify", "--raster", str(path), "--window", "1.0", "--gamma", "0.34"])
        assert rc == 1
        assert "REFUSED" in capsys.readouterr().out

    def test_raster_without_claim_just_reports(self, tmp_path, capsys):
        path = self._stripes_file(tmp_path)
        assert main(["certify", "--raster", str(path), "--window", "1.0"]) == 0
        out = capsys.readouterr().out
        assert "gamma_star" in out and "CERTIFIED" not in out

    def test_model_thickness_claim_passes(self, capsys):
        rc = main(["certify", "--model", str(CONFIG_DIR / "covering.model.ini")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "covering lower bound: ok" in out and "verdict: PASS" in out

    def test_model_refutation_claim_passes(self, capsys):
        rc = main(["certify", "--model", str(CONFIG_DIR / "geometric.model.ini"),
                   "--kappa", "0.5", "--window", "1.0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "empty window at" in out and "verdict: PASS" in out
        assert "np.float64" not in out

    def test_model_without_claims_rejected(self, tmp_path, capsys):
        bare = tmp_path / "bare.model.ini"
        bare.write_text(
            "[model]\ndimension = 1\nextent = 6.0\nresolution = 8\n\n"
            "[sites]\nprofile = indicator-ball\nradius = 0.5\nplacement = all-integers\n\n"
            "[distribution]\nkind = uniform\nlo = 0.0\nhi = 1.0\n"
        )
        assert main(["certify", "--model", str(bare)]) == 2
        assert "neither" in capsys.readouterr().err

    def test_no_target_rejected(self, capsys):
        assert main(["certify"]) == 2
        assert "--raster or --model" in capsys.readouterr().err


@pytest.fixture(scope="module")
def stored(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("stored")
    cfg = _write(tmp / "u.ini", TINY_UNCERTAINTY)
    out = tmp / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    return out


class TestReportCommand:
    def test_summary_rendering(self, stored, capsys):
        assert main(["report", "--json", str(stored / "report.json")]) == 0
        assert "uncertainty" in capsys.readouterr().out

    def test_csv_rendering_matches_stored_file(self, stored, capsys):
        assert main(["report", "--json", str(stored / "report.json"), "--csv"]) == 0
        assert capsys.readouterr().out == (stored / "records.csv").read_text()

    def test_missing_report_exits_two(self, tmp_path, capsys):
        assert main(["report", "--json", str(tmp_path / "gone.json")]) == 2
        assert "error:" in capsys.readouterr().err
