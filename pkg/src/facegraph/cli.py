"""Command line harness: dataset synthesis, graph building, training,
evaluation, threshold / patch-size sweeps and exports.

Config precedence is flags > config file (JSON mirroring the flag names with
underscores) > built-in defaults; the effective configuration is echoed to
``<out-dir>/config.json``. Exit codes: 0 success, 1 usage error, 2 data
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

import numpy as np

from .data import (
    SyntheticSpec,
    dataset_graphs,
    export_embeddings,
    generate_synthetic,
    generate_synthetic_imageset,
    load_dataset,
    save_dataset,
    split_indices,
    write_graph_dot,
    write_graph_json,
)
from .errors import (
    CheckpointError,
    DatasetError,
    InvalidInputError,
    NumericError,
)
from .features import EncoderConfig
from .gcn import (
    GcnConfig,
    TrainConfig,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .graphs import edge_count
from .metrics import format_report, report_row

TAU_GRID = ["0.20", "0.25", "0.30", "0.35", "0.40", "0.45", "0.50", "0.70", "0.90"]
PATCH_GRID = ["10", "20", "30", "50", "70", "90"]

DEFAULTS = {
    "seed": 1000,
    "threads": 1,
    "tau": 0.5,
    "patch": "30x30",
    "encoder_dim": 64,
    "encoder_seed": 1000,
    "hidden": 256,
    "layers": 2,
    "activation": "relu",
    "dropout": 0.2,
    "lr": 1e-3,
    "lr_min": 1e-4,
    "weight_decay": 5e-4,
    "epochs": 100,
    "batch_size": 16,
    "test_fraction": 0.25,
    "split": "random",
    "classes": 6,
    "per_class": 40,
    "landmarks": 12,
    "feature_dim": 16,
    "displacement": 12.0,
    "feature_noise": 0.25,
    "with_images": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_patch(text) -> tuple[int, int]:
    parts = str(text).lower().split("x")
    try:
        if len(parts) == 1:
            h = w = int(parts[0])
        elif len(parts) == 2:
            h, w = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise UsageError(f"--patch expects SIZE or HxW, got {text!r}")
    if h < 1 or w < 1:
        raise UsageError(f"patch size must be positive, got {text!r}")
    return h, w


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", required=True)
    common.add_argument("--threads", type=int)

    parser = _Parser(prog="facegraph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--classes", type=int)
    p.add_argument("--per-class", type=int)
    p.add_argument("--landmarks", type=int)
    p.add_argument("--feature-dim", type=int)
    p.add_argument("--displacement", type=float)
    p.add_argument("--feature-noise", type=float)
    p.add_argument("--with-images", action="store_true", default=None)

    def add_graph_flags(sp):
        sp.add_argument("--dataset")
        sp.add_argument("--tau", type=float)
        sp.add_argument("--patch")
        sp.add_argument("--encoder-dim", type=int)
        sp.add_argument("--encoder-seed", type=int)

    def add_model_flags(sp):
        sp.add_argument("--hidden", type=int)
        sp.add_argument("--layers", type=int)
        sp.add_argument("--activation", choices=["relu", "gelu", "elu"])
        sp.add_argument("--dropout", type=float)
        sp.add_argument("--lr", type=float)
        sp.add_argument("--lr-min", type=float)
        sp.add_argument("--weight-decay", type=float)
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--batch-size", type=int)
        sp.add_argument("--test-fraction", type=float)
        sp.add_argument("--split", choices=["random", "subject"])

    p = sub.add_parser("build-graph", parents=[common],
                       help="build and export graphs for every sample")
    add_graph_flags(p)

    p = sub.add_parser("train", parents=[common], help="train a model")
    add_graph_flags(p)
    add_model_flags(p)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    add_graph_flags(p)
    p.add_argument("--checkpoint")

    p = sub.add_parser("sweep", parents=[common],
                       help="train/eval per grid point of tau or patch size")
    add_graph_flags(p)
    add_model_flags(p)
    p.add_argument("--param", choices=["tau", "patch"])
    p.add_argument("--grid", help="comma separated values; defaults per parameter")

    p = sub.add_parser("export-embeddings", parents=[common],
                       help="write readout embeddings for external plotting")
    add_graph_flags(p)
    p.add_argument("--checkpoint")

    p = sub.add_parser("export-graph", parents=[common],
                       help="write one sample's graph as JSON and DOT")
    add_graph_flags(p)
    p.add_argument("--sample-id")
    return parser


_PATH_KEYS = ("dataset", "checkpoint", "param", "grid", "sample_id")


def _effective_config(args) -> dict:
    """Merge defaults, config file and flags (flags win).

    Keys the user actually set (file or flag) are recorded under "_explicit"
    so later stages can tell an explicit value from a default; the marker is
    stripped before the config is echoed.
    """
    config = dict(DEFAULTS)
    explicit = set()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise DatasetError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: invalid JSON config ({exc})") from exc
        unknown = set(loaded) - set(DEFAULTS) - set(_PATH_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
        explicit |= set(loaded)
    for key in (*DEFAULTS, *_PATH_KEYS):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
            explicit.add(key)
    config["command"] = args.command
    config["out_dir"] = str(args.out_dir)
    config["_explicit"] = explicit
    return config


def _require(config: dict, key: str) -> None:
    if not config.get(key):
        raise UsageError(f"--{key.replace('_', '-')} is required")


def _echo_config(config: dict, out_dir: Path) -> None:
    echoed = {k: v for k, v in config.items() if k != "_explicit"}
    with open(out_dir / "config.json", "w", encoding="utf-8") as handle:
        json.dump(echoed, handle, sort_keys=True, indent=1)
        handle.write("\n")


def _encoder(config: dict) -> EncoderConfig:
    return EncoderConfig(out_dim=config["encoder_dim"],
                         projection_seed=config["encoder_seed"])


def _synth_spec(config: dict) -> SyntheticSpec:
    for key in ("classes", "per_class", "landmarks", "feature_dim"):
        if config[key] < 1:
            raise UsageError(f"--{key.replace('_', '-')} must be positive")
    for key in ("displacement", "feature_noise"):
        if config[key] < 0:
            raise UsageError(f"--{key.replace('_', '-')} must be >= 0")
    return SyntheticSpec(
        num_classes=config["classes"],
        samples_per_class=config["per_class"],
        landmark_count=config["landmarks"],
        feature_dim=config["feature_dim"],
        geometry_displacement_scale=config["displacement"],
        feature_noise_scale=config["feature_noise"],
        seed=config["seed"],
    )


def cmd_synth(config: dict, out_dir: Path) -> int:
    spec = _synth_spec(config)
    if config["with_images"]:
        dataset, images = generate_synthetic_imageset(spec)
    else:
        dataset, images = generate_synthetic(spec), None
    save_dataset(dataset, out_dir, images=images)
    print(f"wrote {len(dataset.samples)} samples "
          f"({dataset.num_classes} classes) to {out_dir}")
    return 0


def _load_graphs(config: dict):
    _require(config, "dataset")
    dataset = load_dataset(config["dataset"])
    patch = _parse_patch(config["patch"])
    pairs = dataset_graphs(dataset, config["tau"], patch_size=patch,
                           encoder=_encoder(config))
    return dataset, pairs


def _merge_preprocess(config: dict, preprocess: dict | None) -> dict:
    """Checkpoint graph-construction settings apply unless the user set them."""
    merged = dict(config)
    pre = preprocess or {}
    explicit = config.get("_explicit", set())
    if "tau" in pre and "tau" not in explicit:
        merged["tau"] = pre["tau"]
    if "patch_h" in pre and "patch" not in explicit:
        merged["patch"] = f"{pre['patch_h']}x{pre['patch_w']}"
    for key in ("encoder_dim", "encoder_seed"):
        if key in pre and key not in explicit:
            merged[key] = pre[key]
    return merged


def cmd_build_graph(config: dict, out_dir: Path) -> int:
    dataset, pairs = _load_graphs(config)
    graph_dir = out_dir / "graphs"
    graph_dir.mkdir(exist_ok=True)
    lines = ["sample_id,nodes,edges"]
    for sid, graph in pairs:
        write_graph_json(graph, graph_dir / f"{sid}.json")
        lines.append(f"{sid},{graph.num_nodes},{edge_count(graph.adjacency)}")
    (out_dir / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(pairs)} graphs to {graph_dir}")
    return 0


def _model_and_train_config(config: dict, in_dim: int, num_classes: int):
    model_config = GcnConfig(
        in_dim=in_dim, num_classes=num_classes, hidden_dim=config["hidden"],
        num_layers=config["layers"], activation=config["activation"],
        dropout_rate=config["dropout"],
    )
    train_config = TrainConfig(
        epochs=config["epochs"], batch_size=config["batch_size"],
        lr_init=config["lr"], lr_min=config["lr_min"],
        weight_decay=config["weight_decay"], seed=config["seed"],
    )
    return model_config, train_config


def _write_history(history, path) -> None:
    lines = ["epoch,lr,loss,accuracy"]
    for row in history:
        lines.append(f"{row['epoch']},{row['lr']!r},{row['loss']!r},{row['accuracy']!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _report_json(report, path) -> None:
    doc = {
        "loss": report.loss,
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "war": report.war,
        "uar": report.uar,
        "per_class_recall": [float(r) for r in report.per_class_recall],
        "confusion": report.confusion.tolist(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, sort_keys=True, indent=1)
        handle.write("\n")


def _train_and_eval(config: dict, out_dir: Path):
    """Shared train pipeline; returns (report, mean_edges, class_names)."""
    dataset, pairs = _load_graphs(config)
    graphs = [g for _, g in pairs]
    train_idx, test_idx = split_indices(dataset, config["test_fraction"],
                                        config["seed"], config["split"])
    train_set = [graphs[i] for i in train_idx]
    test_set = [graphs[i] for i in test_idx] or train_set
    model_config, train_config = _model_and_train_config(
        config, graphs[0].features.shape[1], dataset.num_classes)
    model, history = train(train_set, model_config, train_config)
    patch = _parse_patch(config["patch"])
    preprocess = {"tau": config["tau"], "patch_h": patch[0], "patch_w": patch[1],
                  "encoder_dim": config["encoder_dim"],
                  "encoder_seed": config["encoder_seed"]}
    save_checkpoint(out_dir / "checkpoint.json", model, preprocess=preprocess)
    _write_history(history, out_dir / "history.csv")
    report = evaluate(model, test_set)
    _report_json(report, out_dir / "metrics.json")
    mean_edges = float(np.mean([edge_count(g.adjacency) for g in graphs]))
    return report, mean_edges, dataset.class_names


def cmd_train(config: dict, out_dir: Path) -> int:
    report, _, class_names = _train_and_eval(config, out_dir)
    print(format_report(report, class_names))
    return 0


def cmd_eval(config: dict, out_dir: Path) -> int:
    _require(config, "checkpoint")
    model, meta = load_checkpoint(config["checkpoint"])
    dataset, pairs = _load_graphs(_merge_preprocess(config, meta.get("preprocess")))
    report = evaluate(model, [g for _, g in pairs])
    _report_json(report, out_dir / "metrics.json")
    print(format_report(report, dataset.class_names))
    return 0


def _sweep_point(config: dict, out_dir: Path, param: str, token: str):
    point_config = dict(config)
    if param == "tau":
        point_config["tau"] = float(token)
    else:
        size = int(token)
        point_config["patch"] = f"{size}x{size}"
    point_dir = out_dir / f"point_{param}_{token}"
    point_dir.mkdir(parents=True, exist_ok=True)
    report, mean_edges, _ = _train_and_eval(point_config, point_dir)
    row = {param: token, **report_row(report),
           "mean_edges": repr(mean_edges), "status": "ok"}
    return row


def cmd_sweep(config: dict, out_dir: Path) -> int:
    _require(config, "param")
    param = config["param"]
    grid_text = config.get("grid")
    tokens = ([t.strip() for t in str(grid_text).split(",") if t.strip()]
              if grid_text else (TAU_GRID if param == "tau" else PATCH_GRID))
    if not tokens:
        raise UsageError("--grid is empty")

    columns = [param, "Acc", "F1-Score", "WAR", "UAR", "loss", "mean_edges", "status"]
    rows: list[dict | None] = [None] * len(tokens)

    def run_point(k: int):
        token = tokens[k]
        try:
            rows[k] = _sweep_point(config, out_dir, param, token)
        except Exception as exc:  # failures are table rows, not aborts
            rows[k] = {param: token, "status": f"error: {exc}"}

    threads = int(config["threads"])
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_point, range(len(tokens))))
    else:
        for k in range(len(tokens)):
            run_point(k)

    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(str(row.get(c, "")) for c in columns))
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(tokens)} sweep rows to {out_dir / 'sweep.csv'}")
    return 0


def cmd_export_embeddings(config: dict, out_dir: Path) -> int:
    _require(config, "checkpoint")
    model, meta = load_checkpoint(config["checkpoint"])
    _, pairs = _load_graphs(_merge_preprocess(config, meta.get("preprocess")))
    target = out_dir / "embeddings.csv"
    export_embeddings(model, pairs, target)
    print(f"wrote {len(pairs)} embeddings to {target}")
    return 0


def cmd_export_graph(config: dict, out_dir: Path) -> int:
    dataset, pairs = _load_graphs(config)
    wanted = config.get("sample_id")
    if wanted is None:
        sid, graph = pairs[0]
    else:
        matches = [(s, g) for s, g in pairs if s == wanted]
        if not matches:
            raise DatasetError(f"sample {wanted!r} not found in dataset")
        sid, graph = matches[0]
    write_graph_json(graph, out_dir / f"graph_{sid}.json")
    write_graph_dot(graph, out_dir / f"graph_{sid}.dot")
    print(f"wrote graph_{sid}.json and graph_{sid}.dot to {out_dir}")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "build-graph": cmd_build_graph,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "export-embeddings": cmd_export_embeddings,
    "export-graph": cmd_export_graph,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _effective_config(args)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _echo_config(config, out_dir)
        return _COMMANDS[args.command](config, out_dir)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, InvalidInputError, CheckpointError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
