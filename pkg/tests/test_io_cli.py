import csv
import json

import pytest

from popmarket import ConfigError, NoTraceError, SweepConfig, TraceSpec, run_grid
from popmarket import cli, io


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


class TestParseConfig:
    def test_defaults(self, tmp_path):
        cfg = io.parse_config(write_json(tmp_path / "c.json", {"alphas": [1], "betas": [0.4]}))
        assert cfg == SweepConfig(alphas=(1.0,), betas=(0.4,))
        assert (cfg.n_items, cfg.T, cfg.n_runs) == (100, 100_000, 50)
        assert (cfg.tie_rank_mode, cfg.tau_variant, cfg.trace) == ("max_rank", "tau_b", None)

    @pytest.mark.parametrize("raw, key", [
        ({"alphas": [1], "betas": [1.5]}, "betas"),
        ({"alphas": [-1], "betas": [0.5]}, "alphas"),
        ({"alphas": [1], "betas": []}, "betas"),
        ({"alphas": [1], "betas": [0.5], "n_items": 1}, "n_items"),
        ({"alphas": [1], "betas": [0.5], "T": 0}, "T"),
        ({"alphas": [1], "betas": [0.5], "n_runs": 2.5}, "n_runs"),
        ({"alphas": [1], "betas": [0.5], "master_seed": -3}, "master_seed"),
        ({"alphas": [1], "betas": [0.5], "tie_rank_mode": "dense"}, "tie_rank_mode"),
        ({"alphas": [1], "betas": [0.5], "tau_variant": "tau_c"}, "tau_variant"),
        ({"alphas": [1], "betas": [0.5], "colour": "red"}, "colour"),
        ({"betas": [0.5]}, "alphas"),
        ({"alphas": [1], "betas": [0.5], "trace": {"scale": "cubic"}}, "trace.scale"),
        ({"alphas": [1], "betas": [0.5], "T": 10, "trace": {"times": [5, 50]}}, "trace"),
    ])
    def test_errors_name_the_key(self, raw, key):
        with pytest.raises(ConfigError) as info:
            io.config_from_dict(raw)
        assert info.value.key == key
        assert key in str(info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            io.parse_config(tmp_path / "nope.json")

    def test_malformed(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{alphas: [1]")
        with pytest.raises(ConfigError, match="malformed"):
            io.parse_config(p)

    def test_overrides(self, tmp_path):
        p = write_json(tmp_path / "c.json", {"alphas": [1], "betas": [0.4]})
        cfg = io.parse_config(p, ["betas=[0, 0.5]", "tie_rank_mode=min_rank", "T=1000"])
        assert cfg.betas == (0.0, 0.5) and cfg.tie_rank_mode == "min_rank" and cfg.T == 1000

    def test_trace_field_override(self):
        cfg = io.parse_config(None, ["alphas=[1]", "betas=[0]", "trace.n_points=7"])
        assert cfg.trace.n_points == 7 and cfg.trace.scale == "log"
        with pytest.raises(ConfigError) as info:
            io.parse_config(None, ["alphas=[1]", "betas=[0]", "trace.step=3"])
        assert "trace" in str(info.value) and "step" in str(info.value)

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            io.parse_config(None, ["no_equals_sign"])

    @pytest.mark.parametrize("trace", [None, TraceSpec(n_points=7, scale="linear"), TraceSpec(times=(10, 90))])
    def test_round_trip(self, tmp_path, trace):
        cfg = SweepConfig(alphas=(0.5, 2.0), betas=(0.0, 0.25), n_items=40, T=100,
                          n_runs=3, master_seed=2**63 + 5, tie_rank_mode="min_rank",
                          tau_variant="tau_a", trace=trace)
        io.dump_config(cfg, tmp_path / "c.json")
        assert io.parse_config(tmp_path / "c.json") == cfg


@pytest.fixture(scope="module")
def small_grid():
    cfg = SweepConfig(alphas=(1.0, 0.5), betas=(0.6, 0.0), n_items=20, T=2000, n_runs=4,
                      master_seed=9, trace=TraceSpec(n_points=20))
    return run_grid(cfg)


class TestCsv:
    def test_grid_rows_sorted(self, small_grid, tmp_path):
        io.write_grid_csv(small_grid, tmp_path / "g.csv")
        text = (tmp_path / "g.csv").read_text()
        lines = text.splitlines()
        assert lines[0] == "alpha,beta,n_runs,mean_q,stderr_q,mean_tau,stderr_tau"
        rows = io.read_csv(tmp_path / "g.csv")
        assert len(rows) == 4
        keys = [(r["alpha"], r["beta"]) for r in rows]
        assert keys == sorted(keys)
        cell = small_grid.cell(0, 0)
        assert rows[-1]["mean_q"] == pytest.approx(cell.mean_q, rel=1e-5)

    def test_single_cell(self, tmp_path):
        grid = run_grid(SweepConfig(alphas=(1,), betas=(0.3,), n_items=5, T=50, n_runs=2))
        io.write_grid_csv(grid, tmp_path / "g.csv")
        assert len((tmp_path / "g.csv").read_text().splitlines()) == 2

    def test_six_significant_digits(self, small_grid, tmp_path):
        io.write_grid_csv(small_grid, tmp_path / "g.csv")
        with open(tmp_path / "g.csv") as fh:
            for row in csv.DictReader(fh):
                digits = row["mean_q"].lstrip("0.").replace(".", "")
                assert len(digits.split("e")[0]) <= 6

    def test_trace_rows(self, small_grid, tmp_path):
        io.write_trace_csv(small_grid, tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "alpha,beta,t,mean_q,stderr_q"
        rows = io.read_csv(tmp_path / "t.csv")
        n_points = len(small_grid.config.schedule())
        assert len(rows) == 4 * n_points
        by_cell = {}
        for r in rows:
            by_cell.setdefault((r["alpha"], r["beta"]), []).append(r)
        assert list(by_cell) == sorted(by_cell)
        for (a, b), cell_rows in by_cell.items():
            ts = [r["t"] for r in cell_rows]
            assert all(y > x for x, y in zip(ts, ts[1:]))
            cell = next(c for c in small_grid.cells.values() if (c.alpha, c.beta) == (a, b))
            assert abs(cell.trace.mean_q[-1] - cell.mean_q) <= 1e-9
            assert cell_rows[-1]["mean_q"] == pytest.approx(cell.mean_q, rel=1e-5)

    def test_twenty_points_two_cells(self, tmp_path):
        cfg = SweepConfig(alphas=(1.0,), betas=(0.2, 0.8), n_items=10, T=10**5, n_runs=1,
                          trace=TraceSpec(n_points=20))
        io.write_trace_csv(run_grid(cfg), tmp_path / "t.csv")
        assert len(io.read_csv(tmp_path / "t.csv")) == 40

    def test_no_trace(self, tmp_path):
        grid = run_grid(SweepConfig(alphas=(1,), betas=(0.3,), n_items=5, T=50, n_runs=2))
        with pytest.raises(NoTraceError):
            io.write_trace_csv(grid, tmp_path / "t.csv")


def run_cli(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


SMALL = ["--set", "alphas=[1, 2]", "--set", "betas=[0, 0.5]", "--set", "n_items=20",
         "--set", "T=3000", "--set", "n_runs=3"]


class TestCli:
    def test_validate(self, tmp_path, capsys):
        p = write_json(tmp_path / "c.json", {"alphas": [1], "betas": [0.4]})
        code, out, _ = run_cli(["validate", "--config", p, "--seed", 17], capsys)
        assert code == 0
        resolved = json.loads(out)
        assert resolved["master_seed"] == 17 and resolved["n_runs"] == 50

    def test_validate_bad_config(self, tmp_path, capsys):
        p = write_json(tmp_path / "c.json", {"alphas": [1], "betas": [1.5]})
        code, _, err = run_cli(["validate", "--config", p], capsys)
        assert code == 2 and "betas" in err

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run_cli(["validate", "--config", tmp_path / "x.json"], capsys)
        assert code == 2 and "not found" in err

    def test_usage_errors(self, capsys):
        assert run_cli([], capsys)[0] == 1
        assert run_cli(["frobnicate"], capsys)[0] == 1
        assert run_cli(["sweep", "--workers", "many"], capsys)[0] == 1
        assert run_cli(["sweep", "--workers", "0", *SMALL], capsys)[0] == 1

    def test_env_workers(self, monkeypatch, capsys, tmp_path):
        monkeypatch.setenv("POPMARKET_WORKERS", "x")
        code, _, err = run_cli(["sweep", "--out", tmp_path, *SMALL], capsys)
        assert code == 1 and "POPMARKET_WORKERS" in err

    def test_simulate(self, capsys):
        code, out, _ = run_cli(["simulate", "--top-k", 3, *SMALL], capsys)
        assert code == 0
        assert "average quality" in out and "kendall tau_b" in out
        assert len(out.strip().splitlines()) == 4 + 3

    def test_simulate_beta_zero_defaults(self, capsys):
        code, out, _ = run_cli(["simulate", "--set", "betas=[0]", "--set", "alphas=[1]"], capsys)
        assert code == 0
        q = float(next(l for l in out.splitlines() if l.startswith("average quality")).split()[2])
        assert abs(q - 2 / 3) <= 0.02

    def test_sweep_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(["sweep", "--out", a, "--seed", 5, *SMALL], capsys)[0] == 0
        assert run_cli(["sweep", "--out", b, "--seed", 5, "--workers", 3, *SMALL], capsys)[0] == 0
        assert (a / "grid.csv").read_bytes() == (b / "grid.csv").read_bytes()
        manifest = json.loads((a / "manifest.json").read_text())
        assert manifest["outputs"] == [str(a / "grid.csv")]
        assert manifest["master_seed"] == 5
        assert io.config_from_dict(manifest["config"]) == io.parse_config(None, [*SMALL[1::2], "master_seed=5"])
        assert sorted(p.name for p in a.iterdir()) == ["grid.csv", "manifest.json"]

    def test_trace(self, tmp_path, capsys):
        code, out, _ = run_cli(["trace", "--out", tmp_path, *SMALL], capsys)
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["outputs"] == [str(tmp_path / "grid.csv"), str(tmp_path / "trace.csv")]
        assert manifest["config"]["trace"] == {"n_points": 20, "scale": "log"}
        assert len(io.read_csv(tmp_path / "trace.csv")) == 4 * 20

    def test_runtime_error(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _, err = run_cli(["sweep", "--out", blocker, *SMALL], capsys)
        assert code == 3
