from __future__ import annotations

import math

import numpy as np
import pytest

from twopoint.errors import ConfigError, RangeError
from twopoint.harness.cli import main
from twopoint.harness.config import (
    RunConfig,
    config_hash,
    load_config,
    parse_config,
    serialize,
    with_seed,
)
from twopoint.harness.functions import get_function, list_functions
from twopoint.harness.runner import TIMESTAMP_PREFIX, run, thread_count


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == RunConfig()

    def test_parse_sections(self):
        cfg = parse_config("""
[space]
generator = random
n = 30
seed = 4
[construction]
kind = st_d
[analyses]
zeta = 0.5, 1, 2
dixmier = const1, linear   # comment
sweep = 1, 64
""")
        assert cfg.space.generator == "random" and cfg.space.n == 30
        assert cfg.construction.kind == "st_d"
        assert cfg.analyses.zeta == (0.5, 1.0, 2.0)
        assert cfg.analyses.dixmier == ("const1", "linear")
        assert cfg.analyses.sweep == (1.0, 64.0)

    @pytest.mark.parametrize("text,field", [
        ("[construction]\ndelta = 0", "construction.delta"),
        ("[construction]\ndelta = -2", "construction.delta"),
        ("[construction]\nrho = 1", "construction.rho"),
        ("[construction]\ndelta = abc", "construction.delta"),
        ("[space]\ncolour = red", "space.colour"),
        ("[extras]\nx = 1", "extras"),
        ("[space]\nlevel = 16", "space.level"),
        ("[analyses]\nsweep = 5, 1", "analyses.sweep"),
        ("[analyses]\npoints_per_octave = 4", "analyses.points_per_octave"),
        ("[analyses]\nmetric = maybe", "analyses.metric"),
        ("[output]\nformat = xml", "output.format"),
        ("[space]\ngenerator = file", "space.path"),
    ])
    def test_validation_names_field(self, text, field):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.field == field
        assert field in str(exc.value)

    def test_overrides(self):
        cfg = parse_config("[construction]\ndelta = 2", ["construction.delta=5",
                                                         "space.m = 33"])
        assert cfg.construction.delta == 5 and cfg.space.m == 33
        with pytest.raises(ConfigError):
            parse_config("", ["nodot=1"])
        with pytest.raises(ConfigError) as exc:
            parse_config("", ["construction.delta=0"])
        assert exc.value.field == "construction.delta"

    def test_roundtrip_idempotent(self):
        cfg = parse_config("[analyses]\nzeta = 0.5, 1.25\ndixmier = square\n[space]\nm=65")
        text = serialize(cfg)
        assert parse_config(text) == cfg
        assert serialize(parse_config(text)) == text

    def test_hash_stable(self):
        a = parse_config("[space]\nm = 65")
        b = parse_config("[space]\nm=65\n")
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(parse_config("[space]\nm = 129"))

    def test_seed(self):
        assert with_seed(RunConfig(), 7).space.seed == 7
        assert with_seed(RunConfig(), None) == RunConfig()

    def test_load_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "none.ini"))


class TestFunctions:
    def test_builtins(self):
        assert float(get_function("const1")(0.3)) == 1
        assert float(get_function("linear")(0.75)) == 0.75
        assert float(get_function("square")(0.5)) == 0.25
        names = [n for n, _ in list_functions()]
        assert names == ["const1", "linear", "square", "user-table"]

    def test_user_table(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("# x, f\n0, 0\n0.5, 1\n1, 0\n")
        f = get_function(f"user-table:{p}")
        assert np.allclose(f(np.array([0.25, 0.5, 0.9])), [0.5, 1.0, 0.2])
        assert f.integral == pytest.approx(0.5)

    def test_user_table_range(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("0.1, 0\n1, 1\n")
        with pytest.raises(RangeError):
            get_function(f"user-table:{p}")

    def test_unknown(self):
        with pytest.raises(ValueError):
            get_function("cubic")


def _strip_timestamps(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith(TIMESTAMP_PREFIX)]


class TestRun:
    def test_interval_sandwich(self, tmp_path):
        cfg = parse_config("[space]\nm = 257\n[construction]\ndelta = 9\nn_min = 5\nn_max = 8")
        res = run(cfg, tmp_path)
        assert res.status == 0 and res.checks["metric"]
        text = (tmp_path / "metric.csv").read_text()
        assert "# violations,0" in text
        assert text.startswith(f"# config-sha256: {config_hash(cfg)}\n")

    def test_two_point_st_d_spectrum(self, tmp_path):
        cfg = parse_config("[space]\ngenerator = two-point\n[construction]\nkind = st_d")
        run(cfg, tmp_path)
        rows = [ln.split(",") for ln in _strip_timestamps(tmp_path / "spectrum.csv")[2:]]
        vals = sorted(float(v) for v, _ in rows)
        assert vals == pytest.approx([-math.sqrt(5), math.sqrt(5)])

    def test_violations_set_status(self, tmp_path):
        # structured (non-nested) centres break the sandwich across distant levels
        cfg = parse_config("[construction]\nchain = structured\ndelta = 9\nn_min = 5\nn_max = 8\n"
                           "[space]\nm = 257")
        res = run(cfg, tmp_path, analyses=["metric"])
        assert res.status == 1 and not res.checks["metric"]

    def test_determinism(self, tmp_path):
        cfg = parse_config("[space]\ngenerator = random\nn = 40\nseed = 3\n[analyses]\n"
                           "zeta = 0.5, 1\nsweep = 1, 100\n")
        run(cfg, tmp_path / "a", dump_triple=True)
        run(cfg, tmp_path / "b", dump_triple=True)
        files = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert "triple_dump.tsv" in files
        for name in files:
            assert _strip_timestamps(tmp_path / "a" / name) == \
                _strip_timestamps(tmp_path / "b" / name)

    def test_tsv(self, tmp_path):
        cfg = parse_config("[output]\nformat = tsv\n[analyses]\nmetric = false")
        run(cfg, tmp_path)
        assert (tmp_path / "spectrum.tsv").read_text().splitlines()[2] == "eigenvalue\tmultiplicity"

    def test_thread_env(self, monkeypatch):
        monkeypatch.setenv("TWOPOINT_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("TWOPOINT_THREADS", "junk")
        assert thread_count() >= 1


class TestCli:
    def test_report(self, tmp_path, capsys):
        code = main(["report", "--out", str(tmp_path), "--set", "space.m=65",
                     "--set", "analyses.zeta=1"])
        assert code == 0
        assert (tmp_path / "zeta.csv").exists()
        assert "metric: PASS" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path, capsys):
        assert main(["build", "--out", str(tmp_path), "--set", "construction.delta=0"]) == 2
        assert "construction.delta" in capsys.readouterr().err

    def test_config_file(self, tmp_path):
        ini = tmp_path / "run.ini"
        ini.write_text("[space]\ngenerator = cantor\nlevel = 5\n[construction]\n"
                       "theta = 0.5\nrho = 0.3333333333333333\nn_max = 5\n")
        assert main(["metric", "--config", str(ini), "--out", str(tmp_path / "o")]) == 0

    def test_build_dump(self, tmp_path):
        assert main(["build", "--out", str(tmp_path), "--dump-triple", "--set", "space.m=17",
                     "--set", "construction.n_max=3"]) == 0
        lines = _strip_timestamps(tmp_path / "triple_dump.tsv")[1:]
        assert lines and all(len(ln.split("\t")) == 5 for ln in lines)

    def test_single_analyses(self, tmp_path):
        out = str(tmp_path)
        assert main(["sweep", "--out", out, "--window", "1", "64"]) == 0
        assert main(["zeta", "--out", out, "--s", "0.5", "1.5"]) == 0
        assert main(["dixmier", "--out", out, "--functions", "linear", "square",
                     "--lambda", "500"]) == 0
        assert (tmp_path / "dixmier.csv").read_text().count("\n") == 2 + 1 + 2

    def test_sweep_requires_window(self, tmp_path):
        assert main(["sweep", "--out", str(tmp_path)]) == 2

    def test_list_functions(self, capsys):
        assert main(["dixmier", "--list"]) == 0
        assert "user-table" in capsys.readouterr().out

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_interval_example(self, tmp_path, capsys):
        assert main(["interval-example", "--out", str(tmp_path), "--n-max", "18"]) == 0
        assert (tmp_path / "summary.csv").exists()
        assert "item e: PASS" in capsys.readouterr().out
