"""End-to-end command-line coverage, run in process through ``main``."""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from selfseed import load_store, write_matrix, write_store
from selfseed.cli import main

SMALL = [
    "--classes", "3", "--per-class", "8",
    "--clip-dim", "8", "--feature-dim", "4",
]


def run_cli(*argv: str) -> int:
    return main(list(argv))


@pytest.fixture(scope="module")
def store_dir(tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("stores") / "small"
    assert run_cli("synth", *SMALL, "--out", str(out)) == 0
    return str(out)


# --- synth ---


def test_synth_writes_store_and_prints_manifest(tmp_path, capsys):
    out = tmp_path / "s"
    assert run_cli("synth", *SMALL, "--out", str(out)) == 0
    printed = capsys.readouterr().out.strip()
    assert printed == str(out / "manifest.json")
    store = load_store(printed)
    assert store.num_images == 24
    assert store.ground_truth is not None
    cfg = json.loads((out / "run_config.json").read_text())
    assert cfg["command"] == "synth"
    assert cfg["config"]["classes"] == 3
    assert "out" not in cfg["config"]


def test_synth_requires_out(capsys):
    assert run_cli("synth") == 2
    assert "--out is required" in capsys.readouterr().err


def test_synth_is_byte_identical_across_directories(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("synth", *SMALL, "--out", str(a)) == 0
    assert run_cli("synth", *SMALL, "--out", str(b)) == 0
    files_a = sorted(os.listdir(a))
    assert files_a == sorted(os.listdir(b))
    for name in files_a:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_synth_seed_changes_content(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("synth", *SMALL, "--out", str(a))
    run_cli("synth", *SMALL, "--seed", "1", "--out", str(b))
    assert (a / "features.bin").read_bytes() != (b / "features.bin").read_bytes()


# --- select-seed ---


def test_select_seed_outputs(store_dir, tmp_path):
    out = tmp_path / "sel"
    assert run_cli(
        "select-seed", "--store", store_dir, "--out", str(out),
        "--k", "2", "--b-size", "8",
    ) == 0
    rankings = json.loads((out / "rankings.json").read_text())
    assert rankings["method"] == "improved"
    assert rankings["b_size"] == 8
    assert rankings["k_neighbors"] == 2  # defaults to k
    assert [l["label_index"] for l in rankings["labels"]] == [0, 1, 2]
    assert all(len(l["entries"]) == 8 for l in rankings["labels"])

    seed = json.loads((out / "seed.json").read_text())
    assert seed["k"] == 2
    assert seed["count"] <= 6
    first = seed["assignments"][0]
    assert set(first) == {"image_index", "image_id", "label_index", "label_name"}

    report = json.loads((out / "selection_report.json").read_text())
    # default grid "1,5,10,16,50" clips to the b_size of 8
    assert report["k_grid"] == [1, 5]
    assert {c["method"] for c in report["cells"]} == {"default", "improved"}


def test_select_seed_without_ground_truth_skips_report(store_dir, tmp_path):
    bare_dir = tmp_path / "bare"
    write_store(load_store(store_dir).without_ground_truth(), bare_dir)
    out = tmp_path / "sel"
    assert run_cli(
        "select-seed", "--store", str(bare_dir), "--out", str(out), "--b-size", "8",
    ) == 0
    assert (out / "seed.json").exists()
    assert not (out / "selection_report.json").exists()


def test_select_seed_requires_store(capsys):
    assert run_cli("select-seed", "--out", "x") == 2
    assert "--store is required" in capsys.readouterr().err


def test_explicit_oversized_k_grid_fails_loudly(store_dir, tmp_path, capsys):
    code = run_cli(
        "select-seed", "--store", store_dir, "--out", str(tmp_path / "o"),
        "--b-size", "8", "--k-grid", "60",
    )
    assert code == 2
    assert "exceeds b_size" in capsys.readouterr().err


def test_bad_k_grid_string(store_dir, tmp_path, capsys):
    code = run_cli(
        "select-seed", "--store", store_dir, "--out", str(tmp_path / "o"),
        "--k-grid", "1,x",
    )
    assert code == 2
    assert "k-grid" in capsys.readouterr().err


# --- train / predict / eval pipeline ---


@pytest.fixture(scope="module")
def train_dir(store_dir, tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("train") / "run"
    code = run_cli(
        "train", "--store", store_dir, "--out", str(out),
        "--k", "2", "--b-size", "8",
    )
    assert code == 0
    return str(out)


def test_train_outputs(train_dir):
    out = train_dir
    for name in ("run_config.json", "rankings.json", "seed.json", "history.jsonl"):
        assert os.path.exists(os.path.join(out, name)), name
    ckpt = os.path.join(out, "checkpoint")
    for name in ("checkpoint.json", "weights.bin", "bias.bin"):
        assert os.path.exists(os.path.join(ckpt, name)), name

    lines = [json.loads(l) for l in
             open(os.path.join(out, "history.jsonl"), encoding="utf-8")]
    assert lines[0]["kind"] == "config"
    assert lines[0]["config"]["command"] == "train"
    assert lines[1]["kind"] == "seed"
    assert lines[-1]["kind"] == "stop"
    assert lines[-1]["stop_reason"] in {
        "LossRebound", "LossAboveLimit", "MaxCycles",
        "RankingExhausted", "NoConfidentSamples",
    }


def test_predict_writes_labeled_rows(store_dir, train_dir, tmp_path):
    out = tmp_path / "pred"
    code = run_cli(
        "predict", "--store", store_dir, "--out", str(out),
        "--checkpoint", os.path.join(train_dir, "checkpoint"),
    )
    assert code == 0
    payload = json.loads((out / "predictions.json").read_text())
    rows = payload["predictions"]
    assert len(rows) == 24
    store = load_store(store_dir)
    for row in rows[:5]:
        assert row["label_name"] == store.class_names[row["label_index"]]
        assert row["image_id"] == store.image_ids[row["image_index"]]


def test_predict_requires_checkpoint(store_dir, tmp_path, capsys):
    code = run_cli("predict", "--store", store_dir, "--out", str(tmp_path / "p"))
    assert code == 2
    assert "--checkpoint is required" in capsys.readouterr().err


def test_predict_csv_format(store_dir, train_dir, tmp_path):
    out = tmp_path / "pred"
    code = run_cli(
        "predict", "--store", store_dir, "--out", str(out), "--format", "csv",
        "--checkpoint", os.path.join(train_dir, "checkpoint"),
    )
    assert code == 0
    lines = (out / "predictions.csv").read_text().splitlines()
    assert lines[0] == "image_index,image_id,label_index,label_name"
    assert len(lines) == 25


def test_predict_rejects_mismatched_checkpoint(train_dir, tmp_path, capsys):
    wide = tmp_path / "wide"
    assert run_cli(
        "synth", "--classes", "3", "--per-class", "4",
        "--clip-dim", "8", "--feature-dim", "6", "--out", str(wide),
    ) == 0
    code = run_cli(
        "predict", "--store", str(wide), "--out", str(tmp_path / "p"),
        "--checkpoint", os.path.join(train_dir, "checkpoint"),
    )
    assert code == 2
    assert "DimensionMismatch" in capsys.readouterr().err


def test_eval_reports(store_dir, train_dir, tmp_path):
    out = tmp_path / "ev"
    code = run_cli(
        "eval", "--store", store_dir, "--out", str(out), "--b-size", "8",
        "--checkpoint", os.path.join(train_dir, "checkpoint"),
    )
    assert code == 0
    for name in ("selection_report.json", "accuracy_zero_shot.json",
                 "accuracy_complete.json"):
        assert (out / name).exists(), name
    zs = json.loads((out / "accuracy_zero_shot.json").read_text())
    assert zs["variant"] == "zero_shot"
    assert zs["num_images"] == 24
    comp = json.loads((out / "accuracy_complete.json").read_text())
    assert comp["variant"] == "complete"
    assert comp["meta"]["command"] == "eval"


def test_eval_custom_variant_tag(store_dir, train_dir, tmp_path):
    out = tmp_path / "ev"
    code = run_cli(
        "eval", "--store", store_dir, "--out", str(out), "--b-size", "8",
        "--checkpoint", os.path.join(train_dir, "checkpoint"),
        "--variant", "seed_only",
    )
    assert code == 0
    assert (out / "accuracy_seed_only.json").exists()


def test_eval_without_checkpoint_scores_zero_shot_only(store_dir, tmp_path):
    out = tmp_path / "ev"
    assert run_cli("eval", "--store", store_dir, "--out", str(out),
                   "--b-size", "8") == 0
    assert (out / "accuracy_zero_shot.json").exists()
    assert not (out / "accuracy_complete.json").exists()


def test_eval_requires_ground_truth(store_dir, tmp_path, capsys):
    bare = tmp_path / "bare"
    write_store(load_store(store_dir).without_ground_truth(), bare)
    code = run_cli("eval", "--store", str(bare), "--out", str(tmp_path / "o"),
                   "--b-size", "8")
    assert code == 2
    assert "MissingGroundTruth" in capsys.readouterr().err


def test_eval_csv_reports(store_dir, tmp_path):
    out = tmp_path / "ev"
    assert run_cli("eval", "--store", store_dir, "--out", str(out),
                   "--b-size", "8", "--format", "csv") == 0
    assert (out / "selection_report.csv").exists()
    header = (out / "accuracy_zero_shot.csv").read_text().splitlines()[0]
    assert header == "class_index,class_name,support,correct,accuracy"


# --- full-run ---


def test_full_run_inventory_and_determinism(store_dir, tmp_path):
    args = ["full-run", "--store", store_dir, "--k", "2", "--b-size", "8"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(*args, "--out", str(a)) == 0
    assert run_cli(*args, "--out", str(b)) == 0

    expected = {
        "run_config.json", "rankings.json", "seed.json", "history.jsonl",
        "checkpoint", "predictions.json", "selection_report.json",
        "accuracy_zero_shot.json", "accuracy_seed_only.json",
        "accuracy_complete.json",
    }
    assert set(os.listdir(a)) == expected

    for root, _, files in os.walk(a):
        for name in files:
            pa = os.path.join(root, name)
            pb = os.path.join(str(b), os.path.relpath(pa, str(a)))
            assert open(pa, "rb").read() == open(pb, "rb").read(), pa


def test_full_run_on_bare_store_skips_reports(store_dir, tmp_path):
    bare = tmp_path / "bare"
    write_store(load_store(store_dir).without_ground_truth(), bare)
    out = tmp_path / "o"
    assert run_cli("full-run", "--store", str(bare), "--k", "2",
                   "--b-size", "8", "--out", str(out)) == 0
    assert (out / "predictions.json").exists()
    assert not (out / "accuracy_complete.json").exists()
    assert not (out / "selection_report.json").exists()


# --- configuration plumbing ---


def test_config_file_preset_flag_precedence(store_dir, tmp_path):
    # b_size 20 leaves room for the preset's k of 16
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"lr": 0.01, "k": 2, "b_size": 20}))

    out1 = tmp_path / "o1"
    assert run_cli("train", "--store", store_dir, "--out", str(out1),
                   "--config", str(config)) == 0
    cfg1 = json.loads((out1 / "run_config.json").read_text())["config"]
    assert cfg1["lr"] == 0.01
    assert cfg1["k"] == 2

    # preset overrides the file ...
    out2 = tmp_path / "o2"
    assert run_cli("train", "--store", store_dir, "--out", str(out2),
                   "--config", str(config), "--preset", "large-labelspace") == 0
    cfg2 = json.loads((out2 / "run_config.json").read_text())["config"]
    assert cfg2["lr"] == 0.0001
    assert cfg2["k"] == 16
    assert cfg2["preset"] == "large-labelspace"

    # ... and explicit flags override the preset
    out3 = tmp_path / "o3"
    assert run_cli("train", "--store", store_dir, "--out", str(out3),
                   "--config", str(config), "--preset", "large-labelspace",
                   "--lr", "0.5", "--k", "2") == 0
    cfg3 = json.loads((out3 / "run_config.json").read_text())["config"]
    assert cfg3["lr"] == 0.5
    assert cfg3["k"] == 2


def test_preset_via_config_file(store_dir, tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"preset": "large-labelspace", "k": 2, "b_size": 20}))
    out = tmp_path / "o"
    assert run_cli("train", "--store", store_dir, "--out", str(out),
                   "--config", str(config)) == 0
    cfg = json.loads((out / "run_config.json").read_text())["config"]
    assert cfg["lr"] == 0.0001  # preset beat the default
    assert cfg["k"] == 16  # and beat the file's k


def test_unknown_config_key(store_dir, tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"warp_factor": 9}))
    code = run_cli("train", "--store", store_dir, "--out", str(tmp_path / "o"),
                   "--config", str(config))
    assert code == 2
    assert "warp_factor" in capsys.readouterr().err


def test_missing_config_file(store_dir, tmp_path, capsys):
    code = run_cli("train", "--store", store_dir, "--out", str(tmp_path / "o"),
                   "--config", str(tmp_path / "nope.json"))
    assert code == 2
    assert "config file not found" in capsys.readouterr().err


def test_unknown_preset(store_dir, tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"preset": "tiny"}))
    code = run_cli("train", "--store", store_dir, "--out", str(tmp_path / "o"),
                   "--config", str(config))
    assert code == 2
    assert "unknown preset" in capsys.readouterr().err


def test_ablation_flags_are_echoed(store_dir, tmp_path):
    out = tmp_path / "o"
    assert run_cli("train", "--store", store_dir, "--out", str(out),
                   "--k", "2", "--b-size", "8",
                   "--retain-seed", "--standardize-features") == 0
    cfg = json.loads((out / "run_config.json").read_text())["config"]
    assert cfg["retain_seed"] is True
    assert cfg["standardize_features"] is True


def test_nan_store_exits_three(store_dir, tmp_path, capsys):
    broken = tmp_path / "broken"
    shutil.copytree(store_dir, broken)
    bad = np.full((24, 4), np.nan, dtype=np.float32)
    write_matrix(broken / "features.bin", bad)
    code = run_cli("select-seed", "--store", str(broken),
                   "--out", str(tmp_path / "o"), "--b-size", "8")
    assert code == 3
    assert "NonFiniteValue" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        run_cli("--version")
    assert info.value.code == 0
    assert capsys.readouterr().out.startswith("selfseed ")


def test_missing_store_path(tmp_path, capsys):
    code = run_cli("train", "--store", str(tmp_path / "ghost"),
                   "--out", str(tmp_path / "o"))
    assert code == 2
    assert "MissingFile" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("selfseed") is None,
                    reason="console script not on PATH")
def test_console_script_smoke(tmp_path):
    out = tmp_path / "s"
    proc = subprocess.run(
        ["selfseed", "synth", *SMALL, "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert (out / "manifest.json").exists()
