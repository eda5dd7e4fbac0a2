import csv
import io

import pytest

from layerdelay import cli
from layerdelay.experiments import (
    COLUMNS,
    ConfigError,
    ExperimentSpec,
    load_spec,
    reproduce_figure,
    run_experiment,
)


def read_rows(text):
    body = "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


@pytest.fixture
def iir_spec():
    return ExperimentSpec(
        "iir_eps", "eps_s", (0.0, 0.1),
        fixed={"k_p": 100, "k_s": 100}, schemes=("IIR",),
    )


class TestSpecValidation:
    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            ExperimentSpec("x", "eps_s", (), fixed={"k_p": 1, "k_s": 1})

    @pytest.mark.parametrize("kwargs", [
        dict(sweep_variable="eps_s", sweep_grid=(0.2, 0.1), fixed={"k_p": 1, "k_s": 1}),
        dict(sweep_variable="speed", sweep_grid=(1,), fixed={"k_p": 1, "k_s": 1}),
        dict(sweep_variable="u", sweep_grid=(1, 2), fixed={"k_p": 1, "k_s": 1, "eps_s": 0.1},
             schemes=("FIR",)),
        dict(sweep_variable="budget", sweep_grid=(1, 2), fixed={"k_p": 1, "k_s": 1, "eps_s": 0.1,
                                                                "n_s": 2}, schemes=("FIR",)),
        dict(sweep_variable="eps_s", sweep_grid=(0.1,), fixed={"k_p": 1, "k_s": 1}, schemes=("FR",)),
        dict(sweep_variable="eps_s", sweep_grid=(0.1, 1.0), fixed={"k_p": 1, "k_s": 1}),
        dict(sweep_variable="eps_s", sweep_grid=(0.1,), fixed={"k_p": 1}),
        dict(sweep_variable="eps_s", sweep_grid=(0.1,), fixed={"k_p": 1, "k_s": 1, "eps_s": 0.2}),
        dict(sweep_variable="eps_s", sweep_grid=(0.1,), fixed={"k_p": 1, "k_s": 1, "colour": 2}),
        dict(sweep_variable="eps_s", sweep_grid=(0.1,), fixed={"k_p": 1, "k_s": 1}, mode="guess"),
        dict(sweep_variable="eps_s", sweep_grid=(0.1,), fixed={"k_p": 1, "k_s": 1}, schemes=("XR",)),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentSpec("x", **kwargs)

    def test_from_mapping_and_yaml(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text(
            "name: demo\n"
            "sweep:\n  variable: n_s\n  grid: [4, 5, 6]\n"
            "fixed:\n  k_p: 3\n  k_s: 4\n  eps_s: 0.2\n"
            "schemes: [FR, FIR]\n"
        )
        spec = load_spec(path)
        assert spec.sweep_grid == (4, 5, 6)
        assert [str(s) for s in spec.schemes] == ["FIR", "FR"]
        with pytest.raises(ConfigError):
            ExperimentSpec.from_mapping({"name": "x"})
        with pytest.raises(ConfigError):
            ExperimentSpec.from_mapping({"sweep": {"variable": "u", "grid": [1]}, "extra": 1})


class TestRunExperiment:
    def test_iir_eps_sweep(self, iir_spec):
        table = run_experiment(iir_spec)
        assert [r["mean_slots"] for r in table.rows] == pytest.approx([10000.0, 100 * 100 / 0.9])
        assert all(r["method"] == "analytic" and r.get("std_err") is None for r in table.rows)

    def test_column_schema(self, iir_spec):
        text = run_experiment(iir_spec).to_csv()
        header = [l for l in text.splitlines() if not l.startswith("#")][0]
        assert tuple(header.split(",")) == COLUMNS
        assert text.endswith("\n")
        assert any(l.startswith("# spec: ") for l in text.splitlines())
        assert any(l.startswith("# tool: ") for l in text.splitlines())

    def test_row_order(self):
        spec = ExperimentSpec(
            "order", "n_s", (6, 7), fixed={"k_p": 2, "k_s": 5, "eps_s": 0.2},
            schemes=("FR", "IIR", "FIR"), mode="both", trials=200,
        )
        rows = run_experiment(spec).rows
        keys = [(r["sweep_value"], r["scheme"], r["method"]) for r in rows]
        assert keys[:6] == [
            (6, "FIR", "analytic"), (6, "FIR", "monte_carlo"),
            (6, "FR", "analytic"), (6, "FR", "monte_carlo"),
            (6, "IIR", "analytic"), (6, "IIR", "monte_carlo"),
        ]

    def test_both_mode_agrees(self):
        spec = ExperimentSpec(
            "both", "u", (1, 4), fixed={"k_p": 3, "k_s": 4, "eps_s": 0.25, "n_s": 6},
            schemes=("IIR", "FR"), mode="both", trials=20_000, seed=3,
        )
        rows = run_experiment(spec).rows
        for analytic, mc in zip(rows[::2], rows[1::2]):
            assert analytic["method"] in ("analytic", "exact_sum")
            assert mc["method"] == "monte_carlo" and mc["trials"] == 20_000 and mc["seed"] == 3
            assert abs(analytic["mean_slots"] - mc["mean_slots"]) <= 3 * mc["std_err"]

    def test_errors_recorded_per_row(self):
        spec = ExperimentSpec(
            "inf", "n_s", (1000, 1001), fixed={"k_p": 2, "k_s": 1000, "eps_s": 0.5},
            schemes=("FR",),
        )
        rows = run_experiment(spec).rows
        assert "zero" in rows[0]["error"] and rows[0].get("mean_slots") is None
        assert rows[1].get("error") is None and rows[1]["mean_slots"] > 0

    def test_normalize_only_adds_column(self, iir_spec):
        plain = run_experiment(iir_spec).rows
        norm = run_experiment(ExperimentSpec(**dict(iir_spec.to_dict(), normalize=True))).rows
        for a, b in zip(plain, norm):
            assert b["normalized"] == pytest.approx(b["mean_slots"] / 10000)
            assert {k: v for k, v in a.items()} == {k: v for k, v in b.items() if k != "normalized"}

    def test_optimized_ns(self):
        spec = ExperimentSpec(
            "opt", "eps_s", (0.1,), fixed={"k_p": 100, "k_s": 100, "n_s": "opt", "ns_max": 200},
            schemes=("FR",),
        )
        (row,) = run_experiment(spec).rows
        assert 100 < row["n_s"] < 200

    def test_budget_sweep(self):
        spec = ExperimentSpec(
            "budget", "budget", (0, 4, 100), fixed={"k_p": 2, "k_s": 1, "eps_s": 0.5, "n_s": 2},
            schemes=("FR", "IIR"), mode="both", trials=50_000,
        )
        rows = run_experiment(spec).rows
        fr4 = [r for r in rows if r["sweep_value"] == 4 and r["scheme"] == "FR"]
        assert fr4[0]["decode_prob"] == pytest.approx(0.5625)
        assert abs(fr4[1]["decode_prob"] - 0.5625) < 0.01
        zero = [r["decode_prob"] for r in rows if r["sweep_value"] == 0]
        assert zero == [0.0] * 4


class TestFigures:
    def test_fig3_shape(self):
        table = reproduce_figure("fig3")
        fr = table.column("mean_slots", scheme="FR")
        fir = table.column("mean_slots", scheme="FIR")
        iir = table.column("mean_slots", scheme="IIR")
        best = fr.index(min(fr))
        assert 0 < best < len(fr) - 1
        assert all(b <= a for a, b in zip(fir, fir[1:]))
        assert fir[-1] == pytest.approx(iir[0], rel=1e-3)

    def test_fig4_single_crossing(self):
        table = reproduce_figure("fig4")
        for eps in (0.1, 0.2, 0.3, 0.4, 0.5):
            iir = table.column("mean_slots", scheme="IIR", eps_s=eps)
            fr = table.column("mean_slots", scheme="FR", eps_s=eps)
            wins = [f < i for f, i in zip(fr, iir)]
            assert not wins[0]
            assert sum(a != b for a, b in zip(wins, wins[1:])) == 1

    def test_fig2_ordering(self):
        table = reproduce_figure("fig2")
        fr = table.column("normalized", scheme="FR")
        iir = table.column("normalized", scheme="IIR")
        assert all(f >= i for f, i in zip(fr, iir))
        assert iir[0] == 1.0 and fr[0] == 1.0

    def test_fig6_k1_identical(self):
        table = reproduce_figure("fig6", trials=500)
        for u in (10, 100, 1000):
            grab = table.column("mean_slots", experiment="fig6_k1", sweep_value=u, method="approx_grabner")
            impr = table.column("mean_slots", experiment="fig6_k1", sweep_value=u, method="approx_improved")
            assert grab == impr

    def test_unknown(self):
        with pytest.raises(ConfigError):
            reproduce_figure("fig9")

    def test_byte_identical(self):
        a = reproduce_figure("fig6", trials=300, seed=5).to_csv()
        b = reproduce_figure("fig6", trials=300, seed=5).to_csv()
        assert a == b


class TestCli:
    def test_analyze_stdout(self, capsys):
        assert cli.main(["analyze", "--scheme", "FR", "--k-s", "2", "--k-p", "100",
                         "--n-s", "4", "--eps-s", "0.5"]) == 0
        (row,) = read_rows(capsys.readouterr().out)
        assert float(row["mean_slots"]) == pytest.approx(581.818181818, rel=1e-9)

    def test_simulate_file_deterministic(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            assert cli.main(["simulate", "--scheme", "IIR", "--k-s", "3", "--k-p", "2",
                             "--eps-s", "0.2", "--users", "4", "--trials", "2000",
                             "--seed", "17", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        (row,) = read_rows(outs[0].decode())
        assert row["method"] == "monte_carlo" and row["seed"] == "17"

    def test_optimize_profile(self, capsys):
        assert cli.main(["optimize", "--scheme", "FR", "--k-s", "10", "--k-p", "5",
                         "--eps-s", "0.2"]) == 0
        rows = read_rows(capsys.readouterr().out)
        assert len(rows) == 21 and sum(int(r["best"]) for r in rows) == 1

    def test_optimize_crossover(self, capsys):
        assert cli.main(["optimize", "--crossover", "--k-s", "20", "--k-p", "20",
                         "--eps-s", "0.5", "--grid", "1,10,100,1000"]) == 0
        out = capsys.readouterr().out
        assert "# crossover:" in out
        assert read_rows(out)[0]["fr_wins"] == "0"

    def test_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "s.yaml"
        cfg.write_text("sweep: {variable: eps_s, grid: [0.0, 0.1]}\nfixed: {k_p: 100, k_s: 100}\n")
        assert cli.main(["sweep", str(cfg), "--normalize"]) == 0
        rows = read_rows(capsys.readouterr().out)
        assert [float(r["mean_slots"]) for r in rows] == pytest.approx([10000.0, 11111.111111])
        assert rows[0]["normalized"] == "1.0"

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("sweep: {variable: eps_s, grid: []}\nfixed: {k_p: 1, k_s: 1}\n")
        assert cli.main(["sweep", str(cfg)]) == 2
        assert cli.main(["sweep", str(tmp_path / "missing.yaml")]) == 2
        assert cli.main(["analyze", "--scheme", "FIR", "--k-s", "2", "--k-p", "2",
                         "--n-s", "3", "--eps-s", "0.1", "--users", "2"]) == 2

    def test_figure(self, tmp_path):
        out = tmp_path / "f3.csv"
        assert cli.main(["figure", "fig3", "--out", str(out)]) == 0
        assert "# figure: \"fig3\"" in out.read_text()
