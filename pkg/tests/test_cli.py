"""End-to-end tests of the simulate, assimilate, learn and evaluate commands."""

import sys
import os
import json
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

# Add the app directory to the path so we can import our modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from app.errors import ConfigError, DatasetError
from app.experiments.config import load_experiment_config
from app.experiments.evaluation import cmd_evaluate
from app.main import main as cli
from tests.fixtures.sample_data import (
    SMALL_ARCHITECTURE,
    SMALL_SCENARIO_A,
    SMALL_SCENARIO_B,
    SMALL_TRAINING,
)


def _write_config(directory: Path, payload: dict, name: str = "config.json") -> Path:
    path = directory / name
    path.write_text(json.dumps(payload))
    return path


def _tree_bytes(directory: Path) -> dict:
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


def test_config_loading():
    print("⚙️  Testing experiment config loading...")
    config = load_experiment_config()
    assert config.scenario == "A"
    assert config.scenario_a.L == 224
    assert config.scenario_b.L == 144
    assert config.training.train_frames == config.scenario_b.train_frames == 20
    assert config.assimilation.lam == 1.0
    assert config.architectures == ["lstm", "euler", "rk4"]

    with tempfile.TemporaryDirectory() as tmp:
        path = _write_config(Path(tmp), {"training": {"epochs": 7}})
        desk = load_experiment_config(path, desk_scale=True)
        assert desk.training.epochs == 7
        assert desk.scenario_b.L == 50
        assert load_experiment_config(desk_scale=True).training.epochs == 5000

        seeded = load_experiment_config(path, seed=9)
        assert seeded.seed == seeded.scenario_a.rng_seed == seeded.scenario_b.rng_seed == seeded.training.seed == 9

        bad = Path(tmp) / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_experiment_config(bad)
        with pytest.raises(ConfigError):
            load_experiment_config(Path(tmp) / "missing.json")
        with pytest.raises(ValidationError):
            load_experiment_config(_write_config(Path(tmp), {"scenario_a": {"bands": 3}}, "unknown.json"))
        with pytest.raises(ValidationError):
            load_experiment_config(_write_config(Path(tmp), {"scenario_b": {"T": 5, "train_frames": 5}}, "split.json"))


def test_simulate_is_reproducible():
    print("🎲 Testing simulate...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = _write_config(tmp, {"scenario_a": SMALL_SCENARIO_A, "scenario_b": SMALL_SCENARIO_B})
        assert cli(["simulate", "--config", str(config), "--out", str(tmp / "a1")]) == 0
        assert cli(["simulate", "--config", str(config), "--out", str(tmp / "a2")]) == 0
        first = _tree_bytes(tmp / "a1")
        assert first == _tree_bytes(tmp / "a2")
        assert {"manifest.json", "truth.f64", "observations.f64", "endmembers_t0.csv", "abundances.csv"} <= set(first)

        assert cli(["simulate", "--config", str(config), "--scenario", "B", "--out", str(tmp / "b")]) == 0
        manifest = json.loads((tmp / "b" / "manifest.json").read_text())
        assert manifest["scenario"] == "B"
        assert manifest["shapes"] == {"T": 8, "L": 6, "P": 2, "N": 30}

        assert cli(["simulate", "--config", str(config), "--seed", "11", "--out", str(tmp / "a3")]) == 0
        assert _tree_bytes(tmp / "a3")["truth.f64"] != first["truth.f64"]


def test_assimilate_noiseless_oracle():
    print("🛰️  Testing assimilate...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = _write_config(
            tmp,
            {
                "scenario_a": SMALL_SCENARIO_A,
                "assimilation": {"method": "closed_form"},
                "oracle_abundances": True,
            },
        )
        assert cli(["simulate", "--config", str(config), "--out", str(tmp / "data")]) == 0
        assert cli(["assimilate", "--config", str(config), "--dataset", str(tmp / "data"), "--out", str(tmp / "run")]) == 0
        assert cli(["assimilate", "--config", str(config), "--dataset", str(tmp / "data"), "--out", str(tmp / "rerun")]) == 0
        assert _tree_bytes(tmp / "run") == _tree_bytes(tmp / "rerun")

        rmse = pd.read_csv(tmp / "run" / "rmse.csv")
        assert list(rmse.columns) == ["frame", "rmse_assim", "rmse_vca"]
        assert len(rmse) == SMALL_SCENARIO_A["T"]
        assert rmse["frame"].tolist() == list(range(SMALL_SCENARIO_A["T"]))
        assert (rmse["rmse_assim"] < 1e-6).all()

        spectra = pd.read_csv(tmp / "run" / "spectra_last_frame.csv")
        assert list(spectra.columns) == ["band", "truth", "assimilated", "vca"]
        assert len(spectra) == SMALL_SCENARIO_A["L"]

        result = json.loads((tmp / "run" / "result.json").read_text())
        assert result["command"] == "assimilate"
        assert result["summary"]["method"] == "closed_form"


def test_assimilate_iterative_from_vca():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = _write_config(tmp, {"scenario_a": {**SMALL_SCENARIO_A, "snr_db": 40.0}, "assimilation": {"max_iter": 300}})
        assert cli(["simulate", "--config", str(config), "--out", str(tmp / "data")]) == 0
        assert cli(["assimilate", "--config", str(config), "--dataset", str(tmp / "data"), "--out", str(tmp / "run")]) == 0
        rmse = pd.read_csv(tmp / "run" / "rmse.csv")
        assert np.isfinite(rmse["rmse_assim"]).all()
        assert np.isfinite(rmse["rmse_vca"]).all()
        assert cli(["assimilate", "--config", str(config), "--dataset", str(tmp / "data"), "--out", str(tmp / "rerun")]) == 0
        assert _tree_bytes(tmp / "run") == _tree_bytes(tmp / "rerun")

        result = json.loads((tmp / "run" / "result.json").read_text())
        assert result["summary"]["init_source"] == "mean"
        assert result["summary"]["refine_iters"] == 3


def test_exit_codes():
    print("🚦 Testing exit codes...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        bad = tmp / "bad.json"
        bad.write_text("[1, 2")
        assert cli(["simulate", "--config", str(bad), "--out", str(tmp / "x")]) == ConfigError.exit_code == 2
        unknown = _write_config(tmp, {"no_such_field": 1}, "unknown.json")
        assert cli(["simulate", "--config", str(unknown), "--out", str(tmp / "x")]) == 2

        assert cli(["assimilate", "--dataset", str(tmp / "nowhere"), "--out", str(tmp / "y")]) == DatasetError.exit_code == 4

        config = _write_config(tmp, {"scenario_b": SMALL_SCENARIO_B, "training": SMALL_TRAINING})
        assert cli(["simulate", "--config", str(config), "--scenario", "B", "--out", str(tmp / "b")]) == 0
        assert cli(["assimilate", "--config", str(config), "--dataset", str(tmp / "b"), "--out", str(tmp / "z")]) == 4
        assert cli(["evaluate", str(tmp / "nowhere"), "--out", str(tmp / "e")]) == 4


def test_learn_small_run():
    print("🤖 Testing learn...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config = _write_config(
            tmp,
            {"scenario_b": SMALL_SCENARIO_B, "training": SMALL_TRAINING, "architecture": SMALL_ARCHITECTURE},
        )
        assert cli(["simulate", "--config", str(config), "--scenario", "B", "--out", str(tmp / "data")]) == 0
        for run in ("r1", "r2"):
            assert cli(["learn", "--config", str(config), "--dataset", str(tmp / "data"), "--out", str(tmp / run)]) == 0

        n_test = SMALL_SCENARIO_B["T"] - SMALL_SCENARIO_B["train_frames"]
        for material in ("material_0", "material_1"):
            metrics = pd.read_csv(tmp / "r1" / f"metrics_{material}.csv")
            assert list(metrics.columns) == ["step", "lstm", "euler", "rk4", "vca"]
            assert metrics["step"].tolist() == list(range(1, n_test + 1))
            assert np.isfinite(metrics[["lstm", "euler", "rk4", "vca"]].to_numpy()).all()
            spectra = pd.read_csv(tmp / "r1" / f"spectra_step4_{material}.csv")
            assert len(spectra) == SMALL_SCENARIO_B["L"]

        for arch in ("lstm", "euler", "rk4"):
            assert (tmp / "r1" / "checkpoints" / f"{arch}.ckpt").is_file()
            losses = pd.read_csv(tmp / "r1" / f"loss_{arch}.csv")
            assert len(losses) == SMALL_TRAINING["epochs"]

        first, second = _tree_bytes(tmp / "r1"), _tree_bytes(tmp / "r2")
        assert first == second


def test_evaluate_single_and_merged():
    print("📊 Testing evaluate...")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        run_a, run_b = tmp / "run_a", tmp / "run_b"
        run_a.mkdir()
        run_b.mkdir()
        pd.DataFrame({"step": [1, 2], "lstm": [0.5, 0.25], "euler": [0.125, 0.75]}).to_csv(
            run_a / "metrics_leaf.csv", index=False
        )
        pd.DataFrame({"frame": [0, 1, 2], "rmse_assim": [0.5, 0.5, 1.0]}).to_csv(run_b / "rmse.csv", index=False)
        pd.DataFrame({"step": [2, 3], "lstm": [1.0, 2.0]}).to_csv(run_b / "metrics_leaf.csv", index=False)

        cmd_evaluate([run_a], tmp / "single")
        single = pd.read_csv(tmp / "single" / "metrics_leaf.csv")
        pd.testing.assert_frame_equal(single, pd.read_csv(run_a / "metrics_leaf.csv"))
        assert (tmp / "single" / "metrics_leaf.dat").read_text().startswith("# step lstm euler\n")

        summary = cmd_evaluate([run_a, run_b], tmp / "merged")
        assert summary["runs"] == ["run_a", "run_b"]
        assert summary["tables"] == ["metrics_leaf", "rmse"]
        merged = pd.read_csv(tmp / "merged" / "metrics_leaf.csv")
        assert list(merged.columns) == ["step", "run_a:lstm", "run_a:euler", "run_b:lstm"]
        assert merged["step"].tolist() == [1, 2, 3]
        assert np.isnan(merged.loc[2, "run_a:lstm"])
        assert np.isnan(merged.loc[0, "run_b:lstm"])

        comparison = pd.read_csv(tmp / "merged" / "comparison.csv")
        assert list(comparison.columns) == ["table", "metric", "run_a", "run_b"]
        row = comparison[(comparison["table"] == "metrics_leaf") & (comparison["metric"] == "lstm")].iloc[0]
        assert row["run_a"] == pytest.approx(0.375)
        assert row["run_b"] == pytest.approx(1.5)
        rmse_row = comparison[comparison["table"] == "rmse"].iloc[0]
        assert np.isnan(rmse_row["run_a"])
        assert rmse_row["run_b"] == pytest.approx(2.0 / 3.0)
        assert (tmp / "merged" / "comparison.txt").is_file()

        cmd_evaluate([run_a, run_b], tmp / "merged_again")
        assert cli(["evaluate", str(run_a), str(run_b), "--out", str(tmp / "merged_cli")]) == 0
        assert _tree_bytes(tmp / "merged") == _tree_bytes(tmp / "merged_again") == _tree_bytes(tmp / "merged_cli")

        empty = tmp / "empty"
        empty.mkdir()
        with pytest.raises(DatasetError) as info:
            cmd_evaluate([empty, tmp / "missing"], tmp / "out")
        assert "missing" in str(info.value) and "empty" in str(info.value)


def main():
    """Run all command-line tests."""
    print("🧪 Multitemporal Unmixing - Command Line Tests")
    print("=" * 60)

    test_config_loading()
    test_simulate_is_reproducible()
    test_assimilate_noiseless_oracle()
    test_assimilate_iterative_from_vca()
    test_exit_codes()
    test_learn_small_run()
    test_evaluate_single_and_merged()

    print("\n" + "=" * 60)
    print("✅ Command line tests completed!")


if __name__ == "__main__":
    main()
