"""Command-line entry points.

Subcommands mirror the pipeline stages:

    synth        generate a synthetic store with ground truth
    select-seed  rank candidates per label and assemble the seed set
    train        run the full self-training loop, write checkpoint + history
    predict      apply a saved checkpoint to a store
    eval         selection-accuracy curves and accuracy reports
    full-run     select-seed + train + predict + eval in one deterministic pass

Every flag can also come from a JSON config file (``--config``); precedence
is defaults < config file < preset < explicit flags. Each command writes a
``run_config.json`` with the fully resolved configuration next to its other
outputs, and identical invocations produce byte-identical output trees: no
timestamps, no absolute paths, no unordered serialization.

Exit codes: 0 success, 2 usage or input errors, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Optional

import numpy as np

from . import __version__
from .classifier import LinearClassifier, load_checkpoint, predict, save_checkpoint
from .errors import MissingGroundTruth, NonFiniteValue, SelfSeedError
from .evaluation import classification_accuracy, emit_report, selection_report
from .selftrain import (
    CycleConfig,
    assemble_seed,
    run_selftraining,
    train_seed_classifier,
    write_history,
)
from .similarity import METHODS, Ranking, build_rankings, zero_shot_predict
from .store import EmbeddingStore, load_store, write_store
from .synthetic import SynthConfig, generate

PRESETS: dict[str, dict[str, Any]] = {
    # many-label regime: gentler steps, bigger seed tranches
    "large-labelspace": {"lr": 0.0001, "k": 16},
}

_SELECTION = {
    "k": 5,
    "k_neighbors": None,  # defaults to k at resolution time
    "b_size": 100,
    "method": "improved",
}
_LOOP = {
    "i_epochs": 100,
    "r_epochs": 20,
    "lr": 0.001,
    "loss_limit": 0.1,
    "max_cycles": 20,
    "retain_seed": False,
}
_COMMON = {"seed": 0, "format": "json", "standardize_features": False}

DEFAULTS: dict[str, dict[str, Any]] = {
    "synth": {
        "classes": 10,
        "per_class": 100,
        "clip_dim": 64,
        "feature_dim": 32,
        "separation": 1.0,
        "noise": 0.35,
        "label_bias": 0.0,
        "bias_strength": 0.95,
        "seed": 0,
    },
    "select-seed": {**_SELECTION, "k_grid": "1,5,10,16,50", **_COMMON},
    "train": {**_SELECTION, **_LOOP, **_COMMON},
    "predict": {**_COMMON},
    "eval": {**_SELECTION, "k_grid": "1,5,10,16,50", "variant": "complete", **_COMMON},
    "full-run": {**_SELECTION, **_LOOP, "k_grid": "1,5,10,16,50", **_COMMON},
}


def _add_common(sub: argparse.ArgumentParser, *, store: bool = True) -> None:
    if store:
        sub.add_argument("--store", help="store directory or manifest path")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--config", help="JSON config file mirroring the flags")
    sub.add_argument("--seed", type=int, help="RNG seed (default 0)")
    sub.add_argument("--format", choices=["json", "csv"], help="report format")
    sub.add_argument(
        "--standardize-features",
        action="store_true",
        default=None,
        dest="standardize_features",
        help="standardize feature columns after load (off by default)",
    )


def _add_selection(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=int, help="seed tranche size per label (default 5)")
    sub.add_argument(
        "--k-neighbors", type=int, dest="k_neighbors",
        help="consensus neighborhood size (default: same as --k)",
    )
    sub.add_argument("--b-size", type=int, dest="b_size",
                     help="candidate pool size per label (default 100)")
    sub.add_argument("--method", choices=list(METHODS), help="selection method")


def _add_loop(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--i-epochs", type=int, dest="i_epochs",
                     help="seed-phase epochs (default 100)")
    sub.add_argument("--r-epochs", type=int, dest="r_epochs",
                     help="fine-tune epochs per cycle (default 20)")
    sub.add_argument("--lr", type=float, help="Adam learning rate (default 0.001)")
    sub.add_argument("--loss-limit", type=float, dest="loss_limit",
                     help="stop when a cycle ends at or above this loss (default 0.1)")
    sub.add_argument("--max-cycles", type=int, dest="max_cycles",
                     help="cycle budget (default 20)")
    sub.add_argument("--preset", choices=sorted(PRESETS),
                     help="named hyperparameter bundle")
    sub.add_argument("--retain-seed", action="store_true", default=None,
                     dest="retain_seed",
                     help="ablation: append the seed set to every tranche")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfseed",
        description="Zero-shot classification via confidence-seeded self-training "
                    "on precomputed embedding stores.",
    )
    parser.add_argument("--version", action="version", version=f"selfseed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic store")
    p.add_argument("--classes", type=int, help="number of classes (default 10)")
    p.add_argument("--per-class", type=int, dest="per_class",
                   help="images per class (default 100)")
    p.add_argument("--clip-dim", type=int, dest="clip_dim",
                   help="retrieval embedding width (default 64)")
    p.add_argument("--feature-dim", type=int, dest="feature_dim",
                   help="feature width (default 32)")
    p.add_argument("--separation", type=float, help="feature anchor scale (default 1.0)")
    p.add_argument("--noise", type=float, help="RMS noise norm (default 0.35)")
    p.add_argument("--label-bias", type=float, dest="label_bias",
                   help="fraction of text anchors perturbed (default 0)")
    p.add_argument("--bias-strength", type=float, dest="bias_strength",
                   help="wrong-anchor blend coefficient (default 0.95)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON config file mirroring the flags")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")

    p = sub.add_parser("select-seed", help="rank candidates and assemble the seed")
    _add_common(p)
    _add_selection(p)
    p.add_argument("--k-grid", dest="k_grid",
                   help="comma-separated k values for the selection report")

    p = sub.add_parser("train", help="run the self-training loop")
    _add_common(p)
    _add_selection(p)
    _add_loop(p)

    p = sub.add_parser("predict", help="apply a checkpoint to a store")
    _add_common(p)
    p.add_argument("--checkpoint", help="checkpoint directory or sidecar path")

    p = sub.add_parser("eval", help="selection curves and accuracy reports")
    _add_common(p)
    _add_selection(p)
    p.add_argument("--k-grid", dest="k_grid",
                   help="comma-separated k values for the selection report")
    p.add_argument("--checkpoint", help="score this checkpoint as well")
    p.add_argument("--variant", help="variant tag for the checkpoint report")

    p = sub.add_parser("full-run", help="select, train, predict, and evaluate")
    _add_common(p)
    _add_selection(p)
    _add_loop(p)
    p.add_argument("--k-grid", dest="k_grid",
                   help="comma-separated k values for the selection report")

    return parser


def _resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, config file, preset, and explicit flags, in that order."""
    command = args.command
    cfg: dict[str, Any] = dict(DEFAULTS[command])
    cfg["store"] = None
    cfg["out"] = None
    if command in ("predict", "eval"):
        cfg["checkpoint"] = None

    config_path = getattr(args, "config", None)
    if config_path:
        if not os.path.exists(config_path):
            raise SelfSeedError(f"config file not found: {config_path}")
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                file_values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SelfSeedError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise SelfSeedError("config file must hold a JSON object")
        unknown = sorted(set(file_values) - set(cfg) - {"preset"})
        if unknown:
            raise SelfSeedError(
                f"config file has unknown keys for {command}: {', '.join(unknown)}"
            )
        cfg.update(file_values)

    preset_name = getattr(args, "preset", None)
    if preset_name is None:
        preset_name = cfg.get("preset")
    if preset_name:
        if preset_name not in PRESETS:
            raise SelfSeedError(f"unknown preset {preset_name!r}")
        for key, value in PRESETS[preset_name].items():
            if key in cfg:
                cfg[key] = value
    cfg["preset"] = preset_name

    for dest in list(cfg):
        explicit = getattr(args, dest, None)
        if explicit is not None and dest != "preset":
            cfg[dest] = explicit

    if cfg.get("k_neighbors") is None and "k" in cfg:
        cfg["k_neighbors"] = cfg["k"]
    return cfg


def _require(cfg: dict[str, Any], *keys: str) -> None:
    for key in keys:
        if not cfg.get(key):
            raise SelfSeedError(f"--{key.replace('_', '-')} is required")


def _parse_k_grid(raw: Any) -> list[int]:
    if isinstance(raw, (list, tuple)):
        values = [int(v) for v in raw]
    else:
        try:
            values = [int(part) for part in str(raw).split(",") if part.strip()]
        except ValueError as exc:
            raise SelfSeedError(f"bad --k-grid value {raw!r}") from exc
    if not values or any(v < 1 for v in values):
        raise SelfSeedError(f"--k-grid needs positive integers, got {raw!r}")
    return values


def _effective_k_grid(cfg: dict[str, Any], command: str) -> list[int]:
    """Parse the grid; the built-in default grid is clipped to b_size.

    An explicitly supplied grid is taken at face value, so impossible
    values fail loudly downstream instead of being silently dropped.
    """
    grid = _parse_k_grid(cfg["k_grid"])
    if str(cfg["k_grid"]) == str(DEFAULTS[command].get("k_grid")):
        clipped = [k for k in grid if k <= cfg["b_size"]]
        grid = clipped or [int(cfg["b_size"])]
    return grid


def _write_json(path: str, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _echo(command: str, cfg: dict[str, Any]) -> dict[str, Any]:
    # the output directory is where results land, not a knob that shapes
    # them; leaving it out keeps runs into different dirs byte-comparable
    return {
        "command": command,
        "selfseed_version": __version__,
        "config": {key: cfg[key] for key in sorted(cfg) if key != "out"},
    }


def _write_run_config(out: str, echo: dict[str, Any]) -> None:
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "run_config.json"), echo)


def _rankings_payload(
    store: EmbeddingStore, rankings: list[Ranking], cfg: dict[str, Any]
) -> dict[str, Any]:
    return {
        "method": cfg["method"],
        "b_size": cfg["b_size"],
        "k_neighbors": cfg["k_neighbors"],
        "labels": [
            {
                "label_index": r.label_index,
                "label_name": store.class_names[r.label_index],
                "entries": [[i, s] for i, s in r.entries],
            }
            for r in rankings
        ],
    }


def _seed_payload(store: EmbeddingStore, seed, k: int) -> dict[str, Any]:
    return {
        "k": k,
        "count": len(seed),
        "assignments": [
            {
                "image_index": image,
                "image_id": store.image_ids[image],
                "label_index": label,
                "label_name": store.class_names[label],
            }
            for image, label in seed.assignments
        ],
    }


def _predictions_out(
    store: EmbeddingStore, preds: np.ndarray, out: str, fmt: str,
    echo: dict[str, Any],
) -> None:
    rows = [
        {
            "image_index": i,
            "image_id": store.image_ids[i],
            "label_index": int(preds[i]),
            "label_name": store.class_names[int(preds[i])],
        }
        for i in range(len(preds))
    ]
    if fmt == "json":
        _write_json(
            os.path.join(out, "predictions.json"),
            {"meta": echo, "predictions": rows},
        )
    else:
        import csv

        with open(
            os.path.join(out, "predictions.csv"), "w", encoding="utf-8", newline=""
        ) as fh:
            writer = csv.writer(fh)
            writer.writerow(["image_index", "image_id", "label_index", "label_name"])
            for row in rows:
                writer.writerow(
                    [row["image_index"], row["image_id"],
                     row["label_index"], row["label_name"]]
                )


def _cycle_config(cfg: dict[str, Any]) -> CycleConfig:
    return CycleConfig(
        k=cfg["k"],
        b_size=cfg["b_size"],
        i_epochs=cfg["i_epochs"],
        r_epochs=cfg["r_epochs"],
        learning_rate=cfg["lr"],
        loss_limit=cfg["loss_limit"],
        max_cycles=cfg["max_cycles"],
        rng_seed=cfg["seed"],
        retain_seed=bool(cfg["retain_seed"]),
    )


def _load(cfg: dict[str, Any]) -> EmbeddingStore:
    return load_store(cfg["store"], standardize_features=bool(cfg["standardize_features"]))


def cmd_synth(cfg: dict[str, Any]) -> int:
    _require(cfg, "out")
    store = generate(
        SynthConfig(
            num_classes=cfg["classes"],
            images_per_class=cfg["per_class"],
            clip_dim=cfg["clip_dim"],
            feature_dim=cfg["feature_dim"],
            separation=cfg["separation"],
            noise_sigma=cfg["noise"],
            label_bias=cfg["label_bias"],
            bias_strength=cfg["bias_strength"],
            rng_seed=cfg["seed"],
        )
    )
    manifest = write_store(store, cfg["out"])
    _write_run_config(cfg["out"], _echo("synth", cfg))
    print(manifest)
    return 0


def cmd_select_seed(cfg: dict[str, Any]) -> int:
    _require(cfg, "store", "out")
    store = _load(cfg)
    echo = _echo("select-seed", cfg)
    _write_run_config(cfg["out"], echo)
    quarantined = store.without_ground_truth()
    rankings = build_rankings(
        quarantined, method=cfg["method"], b_size=cfg["b_size"],
        k_neighbors=cfg["k_neighbors"],
    )
    _write_json(
        os.path.join(cfg["out"], "rankings.json"),
        _rankings_payload(store, rankings, cfg),
    )
    seed = assemble_seed(rankings, cfg["k"])
    _write_json(os.path.join(cfg["out"], "seed.json"),
                _seed_payload(store, seed, cfg["k"]))
    if store.ground_truth is not None:
        report = selection_report(
            store, _effective_k_grid(cfg, "select-seed"), methods=METHODS,
            b_size=cfg["b_size"], k_neighbors=cfg["k_neighbors"],
        )
        report.meta = echo
        emit_report(
            report,
            os.path.join(cfg["out"], f"selection_report.{cfg['format']}"),
            cfg["format"],
        )
    return 0


def _train_outputs(
    store: EmbeddingStore, cfg: dict[str, Any], out: str, echo: dict[str, Any]
) -> tuple[LinearClassifier, list[Ranking]]:
    quarantined = store.without_ground_truth()
    rankings = build_rankings(
        quarantined, method=cfg["method"], b_size=cfg["b_size"],
        k_neighbors=cfg["k_neighbors"],
    )
    _write_json(os.path.join(out, "rankings.json"),
                _rankings_payload(store, rankings, cfg))
    seed = assemble_seed(rankings, cfg["k"])
    _write_json(os.path.join(out, "seed.json"), _seed_payload(store, seed, cfg["k"]))
    clf, history = run_selftraining(quarantined, rankings, _cycle_config(cfg))
    save_checkpoint(clf, os.path.join(out, "checkpoint"), config_echo=echo)
    write_history(history, os.path.join(out, "history.jsonl"), config_echo=echo)
    return clf, rankings


def cmd_train(cfg: dict[str, Any]) -> int:
    _require(cfg, "store", "out")
    store = _load(cfg)
    echo = _echo("train", cfg)
    _write_run_config(cfg["out"], echo)
    _train_outputs(store, cfg, cfg["out"], echo)
    return 0


def cmd_predict(cfg: dict[str, Any]) -> int:
    _require(cfg, "store", "out", "checkpoint")
    store = _load(cfg)
    clf = load_checkpoint(cfg["checkpoint"])
    echo = _echo("predict", cfg)
    _write_run_config(cfg["out"], echo)
    preds = predict(clf, store.features)
    _predictions_out(store, preds, cfg["out"], cfg["format"], echo)
    return 0


def cmd_eval(cfg: dict[str, Any]) -> int:
    _require(cfg, "store", "out")
    store = _load(cfg)
    if store.ground_truth is None:
        raise MissingGroundTruth("eval needs a store with ground-truth labels")
    echo = _echo("eval", cfg)
    _write_run_config(cfg["out"], echo)
    fmt = cfg["format"]
    report = selection_report(
        store, _effective_k_grid(cfg, "eval"), methods=METHODS,
        b_size=cfg["b_size"], k_neighbors=cfg["k_neighbors"],
    )
    report.meta = echo
    emit_report(report, os.path.join(cfg["out"], f"selection_report.{fmt}"), fmt)

    zs = classification_accuracy(
        zero_shot_predict(store), store.ground_truth,
        class_names=store.class_names, variant="zero_shot",
    )
    zs.meta = echo
    emit_report(zs, os.path.join(cfg["out"], f"accuracy_zero_shot.{fmt}"), fmt)

    if cfg.get("checkpoint"):
        clf = load_checkpoint(cfg["checkpoint"])
        rep = classification_accuracy(
            predict(clf, store.features), store.ground_truth,
            class_names=store.class_names, variant=cfg["variant"],
        )
        rep.meta = echo
        emit_report(
            rep, os.path.join(cfg["out"], f"accuracy_{cfg['variant']}.{fmt}"), fmt
        )
    return 0


def cmd_full_run(cfg: dict[str, Any]) -> int:
    _require(cfg, "store", "out")
    store = _load(cfg)
    echo = _echo("full-run", cfg)
    out = cfg["out"]
    _write_run_config(out, echo)
    fmt = cfg["format"]

    clf, rankings = _train_outputs(store, cfg, out, echo)
    preds = predict(clf, store.features)
    _predictions_out(store, preds, out, fmt, echo)

    if store.ground_truth is not None:
        report = selection_report(
            store, _effective_k_grid(cfg, "full-run"), methods=METHODS,
            b_size=cfg["b_size"], k_neighbors=cfg["k_neighbors"],
        )
        report.meta = echo
        emit_report(report, os.path.join(out, f"selection_report.{fmt}"), fmt)

        zs = classification_accuracy(
            zero_shot_predict(store), store.ground_truth,
            class_names=store.class_names, variant="zero_shot",
        )
        zs.meta = echo
        emit_report(zs, os.path.join(out, f"accuracy_zero_shot.{fmt}"), fmt)

        seed_clf, _, _ = train_seed_classifier(
            store.without_ground_truth(), rankings, _cycle_config(cfg)
        )
        seed_rep = classification_accuracy(
            predict(seed_clf, store.features), store.ground_truth,
            class_names=store.class_names, variant="seed_only",
        )
        seed_rep.meta = echo
        emit_report(seed_rep, os.path.join(out, f"accuracy_seed_only.{fmt}"), fmt)

        comp = classification_accuracy(
            preds, store.ground_truth,
            class_names=store.class_names, variant="complete",
        )
        comp.meta = echo
        emit_report(comp, os.path.join(out, f"accuracy_complete.{fmt}"), fmt)
    return 0


_HANDLERS = {
    "synth": cmd_synth,
    "select-seed": cmd_select_seed,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "full-run": cmd_full_run,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _HANDLERS[args.command](cfg)
    except NonFiniteValue as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (SelfSeedError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
