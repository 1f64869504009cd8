"""Command line front end.

Subcommands: `lc train --config F` fits the reference model, `lc compress
--config F --reference CK` runs the compression loop, `lc eval
--checkpoint CK --data D` reports error rates, and `lc sweep --config F
--axis PATH --values LIST` traces an error/compression tradeoff.

Configs are JSON with a required top-level "version": 1. Unknown keys are
rejected with field-addressed messages. Exit codes: 0 success, 1 numeric
failure, 2 usage or IO problems, 3 validation problems.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import engine
from .data import Dataset, load_mnist_idx
from .errors import (
    ConfigError,
    FormatError,
    LcError,
    NumericError,
    ShapeError,
    ValidationError,
)
from .models import MlpModel, SgdHyper, sgd_l_step
from .reporting import emit_report, load_checkpoint, save_checkpoint
from .solvers import (
    AdaptiveQuantization,
    AdditiveScheme,
    BinarizeFixed,
    BinarizeScaled,
    CostModel,
    L0Constraint,
    L0Penalty,
    L1Constraint,
    L1Penalty,
    LowRank,
    RankSelect,
    Scheme,
    TernarizeScaled,
)

#: config scheme names (Table-style labels) and their required/optional keys
_SCHEME_KEYS = {
    "adaptive_quantization": ({"k"}, {"solver", "seed"}),
    "binarize_fixed": (set(), set()),
    "binarize_scaled": (set(), set()),
    "ternarize_scaled": (set(), set()),
    "l0_constraint": ({"kappa"}, set()),
    "l1_constraint": ({"kappa"}, set()),
    "l0_penalty": ({"alpha"}, set()),
    "l1_penalty": ({"alpha"}, set()),
    "low_rank": ({"r"}, set()),
    "rank_select_storage": ({"lambda"}, {"coeff"}),
    "rank_select_flops": ({"lambda"}, {"coeff"}),
}

_MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def _expect_keys(d: dict, path: str, required: set, optional: set = frozenset()) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(d).__name__}")
    unknown = set(d) - required - set(optional)
    if unknown:
        raise ConfigError(f"{path}: unknown key {sorted(unknown)[0]!r}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{path}: missing required key {sorted(missing)[0]!r}")


def scheme_from_dict(spec: dict, seed: int, path: str) -> Scheme:
    """Build one scheme from its config mapping."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{path}: scheme needs a 'type' key")
    name = spec["type"]
    if name not in _SCHEME_KEYS:
        raise ConfigError(f"{path}.type: unknown scheme {name!r}")
    required, optional = _SCHEME_KEYS[name]
    _expect_keys(spec, path, required | {"type"}, optional)
    if name == "adaptive_quantization":
        return AdaptiveQuantization(
            k=int(spec["k"]), solver=spec.get("solver", "dp"), seed=int(spec.get("seed", seed))
        )
    if name == "binarize_fixed":
        return BinarizeFixed()
    if name == "binarize_scaled":
        return BinarizeScaled()
    if name == "ternarize_scaled":
        return TernarizeScaled()
    if name == "l0_constraint":
        return L0Constraint(kappa=int(spec["kappa"]))
    if name == "l1_constraint":
        return L1Constraint(radius=float(spec["kappa"]))
    if name == "l0_penalty":
        return L0Penalty(alpha=float(spec["alpha"]))
    if name == "l1_penalty":
        return L1Penalty(alpha=float(spec["alpha"]))
    if name == "low_rank":
        return LowRank(rank=int(spec["r"]))
    kind = "storage" if name == "rank_select_storage" else "flops"
    coeff = spec.get("coeff")
    return RankSelect(lam=float(spec["lambda"]), cost=CostModel(kind=kind, coeff=coeff))


def _is_lowrank_family(scheme: Scheme) -> bool:
    if isinstance(scheme, (LowRank, RankSelect)):
        return True
    if isinstance(scheme, AdditiveScheme):
        return any(_is_lowrank_family(c) for c in scheme.components)
    return False


@dataclass
class RunConfig:
    """Validated run configuration; `raw` echoes the parsed JSON."""

    raw: dict
    model_kind: str
    layer_sizes: tuple[int, ...]
    activation: str
    seed: int
    data: dict
    tasks: list[engine.CompressionTask]
    schedule: engine.ScheduleSpec
    l_step: dict
    train: dict
    eval_cadence: int
    out_dir: Path


def parse_config_dict(cfg: dict) -> RunConfig:
    _expect_keys(
        cfg,
        "config",
        {"version", "model"},
        {"data", "tasks", "schedule", "l_step", "train", "eval", "output"},
    )
    if cfg["version"] != 1:
        raise ConfigError(f"config.version: expected 1, got {cfg['version']!r}")

    model = cfg["model"]
    _expect_keys(model, "model", {"kind"}, {"layer_sizes", "activation", "seed"})
    kind = model["kind"]
    if kind == "lenet300":
        layer_sizes = tuple(model.get("layer_sizes", (784, 300, 100, 10)))
    elif kind == "mlp":
        if "layer_sizes" not in model:
            raise ConfigError("model.layer_sizes: required for kind 'mlp'")
        layer_sizes = tuple(int(s) for s in model["layer_sizes"])
    else:
        raise ConfigError(f"model.kind: unknown kind {kind!r}")
    activation = model.get("activation", "relu")
    if activation not in ("relu", "tanh"):
        raise ConfigError(f"model.activation: must be 'relu' or 'tanh', got {activation!r}")
    seed = int(model.get("seed", 0))

    data = dict(cfg.get("data", {}))
    _expect_keys(
        data, "data", set(), {"root", "train_images", "train_labels", "test_images", "test_labels", "limit_train", "limit_test"}
    )

    probe = MlpModel(layer_sizes, activation=activation, seed=seed)
    tasks = []
    for i, tcfg in enumerate(cfg.get("tasks", [])):
        path = f"tasks[{i}]"
        _expect_keys(tcfg, path, {"layers"}, {"view", "rows", "cols", "scheme", "additive"})
        names = tcfg["layers"]
        if isinstance(names, str):
            names = [names]
        view_name = tcfg.get("view", "vector")
        if view_name == "vector":
            view: engine.AsVector | engine.AsMatrix = engine.AsVector()
        elif view_name == "matrix":
            view = engine.AsMatrix(rows=tcfg.get("rows"), cols=tcfg.get("cols"))
        else:
            raise ConfigError(f"{path}.view: must be 'vector' or 'matrix', got {view_name!r}")
        if ("scheme" in tcfg) == ("additive" in tcfg):
            raise ConfigError(f"{path}: exactly one of 'scheme' or 'additive' is required")
        if "scheme" in tcfg:
            scheme = scheme_from_dict(tcfg["scheme"], seed + i, f"{path}.scheme")
        else:
            comps = tcfg["additive"]
            if not isinstance(comps, list) or len(comps) < 2:
                raise ConfigError(f"{path}.additive: needs a list of at least two schemes")
            scheme = AdditiveScheme(
                components=tuple(
                    scheme_from_dict(c, seed + i, f"{path}.additive[{j}]") for j, c in enumerate(comps)
                )
            )
        tasks.append(engine.CompressionTask(tuple(names), view, scheme))
    if tasks:
        try:
            engine.validate_tasks(probe, tasks)
        except ValidationError as e:
            raise ConfigError(f"tasks: {e}") from e

    any_lowrank = any(_is_lowrank_family(t.scheme) for t in tasks)
    sched_cfg = dict(cfg.get("schedule", {}))
    _expect_keys(sched_cfg, "schedule", set(), {"mu0", "a", "steps", "mode"})
    schedule = engine.ScheduleSpec(
        mu0=float(sched_cfg.get("mu0", 9e-5)),
        a=float(sched_cfg.get("a", 1.4 if any_lowrank else 1.1)),
        num_steps=int(sched_cfg.get("steps", 40)),
        mode=sched_cfg.get("mode", "al"),
    )

    l_step = dict(cfg.get("l_step", {}))
    _expect_keys(l_step, "l_step", set(), {"lr_base", "decay", "epochs_per_step", "batch", "momentum"})
    if "lr_base" not in l_step:
        kinds = {type(t.scheme).__name__ for t in tasks}
        if kinds <= {"AdaptiveQuantization", "BinarizeFixed", "BinarizeScaled", "TernarizeScaled"}:
            l_step["lr_base"] = 0.09
        elif kinds <= {"L0Constraint", "L1Constraint", "L0Penalty", "L1Penalty"}:
            l_step["lr_base"] = 0.1
        else:
            l_step["lr_base"] = 0.05
    l_step.setdefault("decay", 0.98)
    l_step.setdefault("epochs_per_step", 20)
    l_step.setdefault("batch", 128)
    l_step.setdefault("momentum", 0.9)

    train = dict(cfg.get("train", {}))
    _expect_keys(train, "train", set(), {"epochs", "lr", "decay", "batch", "momentum"})
    train.setdefault("epochs", 60)
    train.setdefault("lr", 0.1)
    train.setdefault("decay", 0.98)
    train.setdefault("batch", 128)
    train.setdefault("momentum", 0.9)

    eval_cfg = dict(cfg.get("eval", {}))
    _expect_keys(eval_cfg, "eval", set(), {"cadence"})
    out_cfg = dict(cfg.get("output", {}))
    _expect_keys(out_cfg, "output", set(), {"dir"})

    return RunConfig(
        raw=cfg,
        model_kind=kind,
        layer_sizes=layer_sizes,
        activation=activation,
        seed=seed,
        data=data,
        tasks=tasks,
        schedule=schedule,
        l_step=l_step,
        train=train,
        eval_cadence=int(eval_cfg.get("cadence", 1)),
        out_dir=Path(out_cfg.get("dir", "runs")),
    )


def parse_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FileNotFoundError(f"config file {path}: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    return parse_config_dict(cfg)


# ---------------------------------------------------------------------------
# Data and model plumbing
# ---------------------------------------------------------------------------


def _data_root(config_data: dict, override=None) -> Path:
    root = override or config_data.get("root") or os.environ.get("LC_DATA_DIR")
    if root is None:
        raise FileNotFoundError(
            "no dataset root: set data.root in the config, pass --data, or export LC_DATA_DIR"
        )
    return Path(root)


def _load_split(config_data: dict, root: Path, split: str) -> Dataset:
    images = root / config_data.get(f"{split}_images", _MNIST_FILES[f"{split}_images"])
    labels = root / config_data.get(f"{split}_labels", _MNIST_FILES[f"{split}_labels"])
    for p in (images, labels):
        if not p.exists():
            raise FileNotFoundError(f"dataset file missing: {p}")
    ds = load_mnist_idx(images, labels)
    limit = config_data.get(f"limit_{split}")
    return ds.subset(int(limit)) if limit else ds


def _build_model(config: RunConfig, seed=None) -> MlpModel:
    return MlpModel(config.layer_sizes, activation=config.activation, seed=config.seed if seed is None else seed)


def _model_meta(config: RunConfig) -> dict:
    return {"activation": 0.0 if config.activation == "relu" else 1.0}


def _model_from_checkpoint(ckpt) -> MlpModel:
    sizes = []
    i = 1
    while f"l{i}.weight" in ckpt.weights:
        w = ckpt.weights[f"l{i}.weight"]
        if i == 1:
            sizes.append(w.shape[1])
        sizes.append(w.shape[0])
        i += 1
    if len(sizes) < 2:
        raise FormatError("checkpoint does not contain l<i>.weight entries")
    activation = "tanh" if ckpt.meta.get("activation", 0.0) == 1.0 else "relu"
    model = MlpModel(tuple(sizes), activation=activation, seed=0)
    missing = set(model.params) - set(ckpt.weights)
    if missing:
        raise FormatError(f"checkpoint is missing entries: {sorted(missing)}")
    for name, arr in ckpt.weights.items():
        if name not in model.params:
            raise FormatError(f"checkpoint entry {name!r} does not fit a {sizes} MLP")
        if model.params[name].shape != arr.shape:
            raise FormatError(f"checkpoint entry {name!r} has shape {arr.shape}, expected {model.params[name].shape}")
        model.params[name][...] = arr
    return model


def _eval_fn(train: Dataset, test: Dataset):
    def fn(model):
        return {"train_err": model.evaluate(train), "test_err": model.evaluate(test)}

    return fn


def _make_sgd_l_step(train: Dataset, l_step_cfg: dict, seed: int):
    def fn(model, targets, mu, step_index):
        hyper = SgdHyper(
            lr_base=float(l_step_cfg["lr_base"]),
            decay=float(l_step_cfg["decay"]),
            epochs=int(l_step_cfg["epochs_per_step"]),
            batch=int(l_step_cfg["batch"]),
            momentum=float(l_step_cfg["momentum"]),
            nesterov=True,
            step_index=step_index,
            seed=seed,
        )
        return sgd_l_step(model, targets, mu, hyper, data=train)

    return fn


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = _reseeded(config, args.seed)
    root = _data_root(config.data, args.data)
    train = _load_split(config.data, root, "train")
    test = _load_split(config.data, root, "test")
    out_dir = Path(args.out) if args.out else config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    model = _build_model(config)
    tcfg = config.train
    for epoch in range(int(tcfg["epochs"])):
        hyper = SgdHyper(
            lr_base=float(tcfg["lr"]),
            decay=float(tcfg["decay"]),
            epochs=1,
            batch=int(tcfg["batch"]),
            momentum=float(tcfg["momentum"]),
            nesterov=True,
            step_index=epoch,
            seed=config.seed,
        )
        before, after = sgd_l_step(model, {}, 0.0, hyper, data=train)
        if args.verbose:
            print(f"epoch {epoch}: loss {before:.5f} -> {after:.5f}")
    metrics = {"train_err": model.evaluate(train), "test_err": model.evaluate(test)}
    ckpt_path = out_dir / "reference.ckpt"
    save_checkpoint(ckpt_path, model.params, meta=_model_meta(config))
    (out_dir / "train_metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    print(f"reference model: train_err={metrics['train_err']:.4f} test_err={metrics['test_err']:.4f}")
    print(f"checkpoint: {ckpt_path}")
    return 0


def _reseeded(config: RunConfig, seed: int) -> RunConfig:
    raw = copy.deepcopy(config.raw)
    raw.setdefault("model", {})["seed"] = int(seed)
    return parse_config_dict(raw)


def _run_compression(config: RunConfig, reference_path, out_dir: Path, sequential: bool, data_override=None):
    ckpt = load_checkpoint(reference_path)
    model = _model_from_checkpoint(ckpt)
    if tuple(model.layer_sizes) != tuple(config.layer_sizes):
        raise ValidationError(
            f"reference checkpoint is a {model.layer_sizes} model, config wants {config.layer_sizes}"
        )
    root = _data_root(config.data, data_override)
    train = _load_split(config.data, root, "train")
    test = _load_split(config.data, root, "test")
    out_dir.mkdir(parents=True, exist_ok=True)
    report, state = engine.run(
        model,
        config.tasks,
        config.schedule,
        _make_sgd_l_step(train, config.l_step, config.seed),
        _eval_fn(train, test),
        sequential=sequential,
        eval_every=config.eval_cadence,
        config_echo=config.raw,
    )
    plans = engine.validate_tasks(model, config.tasks)
    backup = engine.substitute_compressed(model, plans, state)
    try:
        save_checkpoint(
            out_dir / "compressed.ckpt",
            model.params,
            thetas={p.index: state.tasks[p.index].theta for p in plans},
            lambdas={p.index: state.tasks[p.index].lam for p in plans},
            meta={**_model_meta(config), "step": float(state.step)},
        )
    finally:
        engine.restore_weights(model, backup)
    emit_report(report, out_dir / "report.csv", fmt="csv")
    emit_report(report, out_dir / "report.json", fmt="json")
    return report


def cmd_compress(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = _reseeded(config, args.seed)
    if not config.tasks:
        raise ConfigError("tasks: at least one compression task is required")
    out_dir = Path(args.out) if args.out else config.out_dir
    report = _run_compression(config, args.reference, out_dir, args.sequential, args.data)
    last = report.records[-1]
    print(
        f"steps={last.step} mismatch={last.mismatch:.3e} "
        f"ratio={report.final.ratio:.2f}x train_err={last.train_err} test_err={last.test_err}"
    )
    for finding in engine.monitor_check(report.records):
        print(f"{finding.severity} (step {finding.step}): {finding.message}", file=sys.stderr)
    print(f"report: {out_dir / 'report.csv'}")
    return 0


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model = _model_from_checkpoint(ckpt)
    root = _data_root({}, args.data)
    results = {}
    for split in ("train", "test"):
        try:
            ds = _load_split({}, root, split)
        except FileNotFoundError:
            continue
        results[f"{split}_err"] = model.evaluate(ds)
    if not results:
        raise FileNotFoundError(f"no dataset files found under {root}")
    print(" ".join(f"{k}={v:.4f}" for k, v in results.items()))
    return 0


_PATH_TOKEN = re.compile(r"([A-Za-z_][A-Za-z_0-9]*)((?:\[\d+\])*)$")


def _apply_axis(raw: dict, axis: str, value):
    """Set one config field addressed as e.g. tasks[0].scheme.kappa."""
    node = raw
    parts = axis.split(".")
    trail = []
    for pos, part in enumerate(parts):
        m = _PATH_TOKEN.match(part)
        if not m:
            raise ConfigError(f"axis {axis!r}: bad path component {part!r}")
        key, brackets = m.group(1), m.group(2)
        indices = [int(t) for t in re.findall(r"\[(\d+)\]", brackets)]
        last = pos == len(parts) - 1
        try:
            if last and not indices:
                if key not in node:
                    raise KeyError(key)
                node[key] = value
                return
            node = node[key]
            for j, idx in enumerate(indices):
                if last and j == len(indices) - 1:
                    node[idx] = value
                    return
                node = node[idx]
        except (KeyError, IndexError, TypeError) as e:
            raise ConfigError(f"axis {axis!r}: no such field ({'.'.join(trail + [part])})") from e
        trail.append(part)


def _parse_values(text: str) -> list:
    values = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            values.append(json.loads(piece))
        except json.JSONDecodeError:
            values.append(piece)
    return values


def cmd_sweep(args) -> int:
    base = parse_config(args.config)
    if args.seed is not None:
        base = _reseeded(base, args.seed)
    values = _parse_values(args.values)
    if not values:
        print("sweep: --values produced an empty list", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out else base.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    reference = args.reference
    if reference is None:
        train_args = argparse.Namespace(
            config=args.config, seed=args.seed, out=str(out_dir / "reference"), data=args.data, verbose=False
        )
        cmd_train(train_args)
        reference = out_dir / "reference" / "reference.ckpt"

    rows = []
    for value in values:
        raw = copy.deepcopy(base.raw)
        _apply_axis(raw, args.axis, value)
        config = parse_config_dict(raw)
        point_dir = out_dir / f"point_{len(rows)}"
        point_dir.mkdir(parents=True, exist_ok=True)
        report = _run_compression(config, reference, point_dir, args.sequential, args.data)
        last = report.records[-1]
        rows.append(
            {
                "value": value,
                "ratio": report.final.ratio,
                "train_err": last.train_err,
                "test_err": last.test_err,
                "mismatch": last.mismatch,
            }
        )
        print(
            f"{args.axis}={value}: ratio={report.final.ratio:.2f}x "
            f"train_err={last.train_err} test_err={last.test_err}"
        )
    (out_dir / "sweep.json").write_text(json.dumps({"axis": args.axis, "points": rows}, indent=2) + "\n")
    with open(out_dir / "sweep.csv", "w") as f:
        f.write("value,ratio,train_err,test_err,mismatch\n")
        for row in rows:
            f.write(
                f"{row['value']},{row['ratio']!r},{row['train_err']!r},{row['test_err']!r},{row['mismatch']!r}\n"
            )
    print(f"sweep table: {out_dir / 'sweep.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the model seed")
    common.add_argument("--sequential", action="store_true", help="solve compression tasks one by one")
    common.add_argument("--out", default=None, help="output directory (overrides config)")
    common.add_argument("--data", default=None, help="dataset root (overrides config and LC_DATA_DIR)")

    parser = argparse.ArgumentParser(prog="lc", description="Compress models by alternating learning and compression steps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train the uncompressed reference model")
    p.add_argument("--config", required=True)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("compress", parents=[common], help="run the compression loop")
    p.add_argument("--config", required=True)
    p.add_argument("--reference", required=True, help="reference checkpoint from `lc train`")
    p.set_defaults(fn=cmd_compress)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter and tabulate the tradeoff")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, help="config path, e.g. tasks[0].scheme.kappa")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--reference", default=None, help="reference checkpoint (trained if omitted)")
    p.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.fn(args)
    except (ConfigError, ValidationError, ShapeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (FileNotFoundError, OSError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except LcError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
