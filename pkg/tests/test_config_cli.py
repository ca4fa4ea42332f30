import csv
import json

import pytest

from simi.cli import run_cli
from simi.config import ConfigError, StopModel, emit_config, parse_config, validate_config

MINIMAL = """
experiment = "simulate"
p = 0.6
trials = 10
seed = 3

[graph]
family = "lattice"
d = 2

[offspring]
kind = "deterministic"
params = { k = 2 }
"""


class TestParse:
    def test_minimal_gets_default_stop(self):
        cfg = parse_config(MINIMAL)
        assert cfg.stop == StopModel()
        assert cfg.stop.build().max_steps == 2000 and cfg.stop.build().max_total_parasites == 100_000

    def test_range_error_names_key(self):
        with pytest.raises(ConfigError, match=r"^p:"):
            parse_config(MINIMAL.replace("p = 0.6", "p = 1.5"))

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_config(MINIMAL + '\ncolour = "red"\n')

    def test_nested_unknown_key(self):
        with pytest.raises(ConfigError, match=r"stop\.max_stepz"):
            parse_config(MINIMAL + "\n[stop]\nmax_stepz = 5\n")

    def test_missing_field(self):
        with pytest.raises(ConfigError, match=r"^p:"):
            parse_config(MINIMAL.replace("p = 0.6", ""))

    def test_option_error_path(self):
        text = MINIMAL.replace('"simulate"', '"couple-audit"') + "\n[options]\np_pairs = [[0.3, 0.7]]\nhorizon = 0\n"
        with pytest.raises(ConfigError, match=r"options\.horizon"):
            parse_config(text)

    def test_sweep_grid(self):
        grid = ", ".join(str(round(0.1 * i, 1)) for i in range(11))
        text = MINIMAL.replace('"simulate"', '"sweep"').replace("p = 0.6", f"p_grid = [{grid}]\nseed_matched = true")
        cfg = parse_config(text)
        assert len(cfg.p_grid) == 11 and cfg.seed_matched

    def test_bad_toml(self):
        with pytest.raises(ConfigError):
            parse_config("experiment = ")

    def test_graph_and_offspring_checked(self):
        with pytest.raises(ConfigError, match="graph"):
            parse_config(MINIMAL.replace("family = \"lattice\"\nd = 2", "family = \"tree\"\nd = 2"))
        with pytest.raises(ConfigError, match="offspring"):
            parse_config(MINIMAL.replace("k = 2", "k = -2"))

    @pytest.mark.parametrize("extra", ["", "\n[stop]\nmax_steps = \"unbounded\"\nmax_radius = 9\n",
                                       "\n[stop]\ndetect_sealed = false\n"])
    def test_roundtrip(self, extra):
        cfg = parse_config(MINIMAL + extra)
        again = parse_config(emit_config(cfg))
        assert again == cfg and again.config_hash() == cfg.config_hash()

    def test_hash_ignores_workers_and_output(self):
        a = parse_config(MINIMAL)
        b = validate_config({**a.model_dump(mode="json"), "workers": 8, "output_dir": "elsewhere"})
        c = validate_config({**a.model_dump(mode="json"), "seed": 4})
        assert a.config_hash() == b.config_hash() != c.config_hash()

    def test_default_options_in_hash(self):
        base = MINIMAL.replace('"simulate"', '"lifetime-census"')
        assert parse_config(base).config_hash() == parse_config(base + "\n[options]\ncap = 100000\n").config_hash()


def run(argv, capsys):
    code = run_cli(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_analytics_escape(self, capsys):
        code, out, _ = run(["analytics", "escape", "--n", "10", "--l", "5"], capsys)
        assert code == 0
        rec = json.loads(out)
        assert rec["value"] == pytest.approx(15 / 730, abs=1e-15)

    def test_analytics_other(self, capsys):
        code, out, _ = run(["analytics", "bgw", "--offspring", "deterministic:2", "--p", "0.75"], capsys)
        assert code == 0 and json.loads(out)["survival_prob"] == pytest.approx(2 / 3)
        code, out, _ = run(["analytics", "bounds", "--offspring", "deterministic:3", "--max-degree", "4"], capsys)
        assert json.loads(out)["theorem1_bound"] == pytest.approx(1 / 3)
        code, out, _ = run(["analytics", "wilson", "--successes", "0", "--trials", "100"], capsys)
        assert json.loads(out)["ci_lo"] == 0

    def test_analytics_domain_error(self, capsys):
        code, _, err = run(["analytics", "escape", "--n", "3", "--l", "9"], capsys)
        assert code == 1 and "error" in err

    def test_simulate_p_zero(self, tmp_path, capsys):
        code, out, _ = run(["simulate", "--graph", "lattice:2", "--offspring", "deterministic:3", "--p", "0",
                            "--trials", "20", "--out", str(tmp_path)], capsys)
        assert code == 0
        summary = json.loads(out)
        assert summary["max_extinction_time"] == 1 and summary["extinct"] == 20
        assert len(out.strip().splitlines()) == 1

    def test_outputs_and_manifest(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text(MINIMAL.replace('"simulate"', '"sweep"').replace("p = 0.6", "p_grid = [0.2, 0.9]"))
        out_dir = tmp_path / "out"
        code, _, _ = run(["sweep", "--config", str(cfg), "--out", str(out_dir), "--max-total-parasites", "2000"],
                         capsys)
        assert code == 0
        man = json.loads((out_dir / "manifest.json").read_text())
        assert set(man) >= {"config_hash", "seed", "version", "started", "finished", "files"}
        assert man["seed"] == 3 and man["config"]["stop"]["max_total_parasites"] == 2000
        lines = (out_dir / "sweep.jsonl").read_text().splitlines()
        assert len(lines) == 20 and all(json.loads(x)["trial"] in range(10) for x in lines)
        with open(out_dir / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["p"]) for r in rows] == [0.2, 0.9]
        assert {"frequency", "ci_lo", "ci_hi"} <= set(rows[0])

    def test_rerun_from_manifest_is_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--graph", "tree:3", "--offspring", "finite:0=0.3,2=0.7", "--p", "0.8",
                "--trials", "40", "--seed", "9"]
        assert run(args + ["--out", str(a)], capsys)[0] == 0
        assert run(["simulate", "--from-manifest", str(a / "manifest.json"), "--out", str(b)], capsys)[0] == 0
        assert (a / "simulate.jsonl").read_bytes() == (b / "simulate.jsonl").read_bytes()
        assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()

    def test_invalid_config_writes_nothing(self, tmp_path, capsys):
        out_dir = tmp_path / "never"
        code, out, err = run(["simulate", "--graph", "lattice:2", "--offspring", "deterministic:3", "--p", "1.5",
                              "--out", str(out_dir)], capsys)
        assert code == 1 and out == "" and "p:" in err
        assert not out_dir.exists()

    def test_usage_errors(self, tmp_path, capsys):
        assert run(["nope"], capsys)[0] == 1
        assert run(["simulate", "--graph", "torus:3"], capsys)[0] == 1
        assert run(["simulate", "--config", str(tmp_path / "missing.toml")], capsys)[0] == 1

    def test_config_for_other_experiment(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text(MINIMAL)
        code, _, err = run(["sweep", "--config", str(cfg)], capsys)
        assert code == 1 and "experiment" in err

    def test_option_flag(self, tmp_path, capsys):
        code, out, _ = run(["lifetime-census", "--graph", "lattice:2", "--p", "0.5", "--trials", "50",
                            "--option", "cap=1000", "--out", str(tmp_path)], capsys)
        assert code == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["config"]["options"]["cap"] == 1000

    def test_internal_error_code(self, tmp_path, capsys, monkeypatch):
        import simi.output

        def boom(cfg):
            raise RuntimeError("kaput")

        monkeypatch.setattr(simi.output, "run_experiment", boom)
        code, _, _ = run(["simulate", "--graph", "line", "--offspring", "deterministic:1", "--p", "0.5",
                          "--out", str(tmp_path / "x")], capsys)
        assert code == 2
        assert not (tmp_path / "x" / "manifest.json").exists()

    @pytest.mark.parametrize("name", ["sweep", "estimate-pc", "couple-audit", "nonmono-search", "equiv-test",
                                      "lifetime-census", "recurrence", "tree-asymptotics", "decorated",
                                      "theta-probe", "percolation"])
    def test_every_subcommand_runs(self, name, tmp_path, capsys):
        common = ["--trials", "4", "--out", str(tmp_path)]
        args = {
            "sweep": ["--graph", "lattice:2", "--offspring", "deterministic:2", "--p-grid", "0.3,0.6"],
            "estimate-pc": ["--graph", "tree:4", "--offspring", "deterministic:2", "--option", "resolution=0.1",
                            "--max-total-parasites", "500"],
            "couple-audit": ["--graph", "lattice:2", "--offspring", "deterministic:2",
                             "--option", "p_pairs=[[0.3, 0.7]]", "--option", "horizon=20"],
            "nonmono-search": ["--graph", "lattice:2", "--offspring", "finite:0=0.3,3=0.7",
                               "--option", "p_pair=[0.25, 0.75]", "--option", "trial_stop=20"],
            "equiv-test": ["--graph", "lattice:2", "--offspring", "deterministic:2", "--p", "0.5"],
            "lifetime-census": ["--graph", "lattice:2", "--p", "0.5"],
            "recurrence": ["--graph", "lattice:2", "--offspring", "deterministic:2", "--p", "0.5",
                           "--option", "horizons=[10, 50]"],
            "tree-asymptotics": ["--offspring", "deterministic:2", "--option", "degrees=[4]",
                                 "--option", "resolution=0.1", "--max-total-parasites", "500"],
            "decorated": ["--p", "0.9", "--option", "ns=[5]", "--option", "d0=4", "--max-total-parasites", "500"],
            "theta-probe": ["--offspring", "deterministic:2", "--option", "N=3", "--option", "r_guess=0.3",
                            "--option", "eps=0.5"],
            "percolation": ["--p-grid", "0.5,0.6,0.7", "--option", "sizes=[8, 16]"],
        }[name]
        code, out, err = run([name] + args + common, capsys)
        assert code == 0, err
        assert json.loads(out)["experiment"] == name
        assert (tmp_path / "manifest.json").exists()
