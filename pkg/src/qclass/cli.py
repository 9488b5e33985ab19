"""The qclass command line: train, eval, predict, gradcheck.

Exit codes: 0 success, 1 usage or configuration error, 2 data or format
error, 3 self-check failure. Options may come from a config file of
``key=value`` lines ('#' starts a comment); explicit flags win over the
config file, which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import load_dataset, resolve_coarse_label
from .embeddings import load_embeddings
from .errors import ConfigError, QclassError
from .hierarchy import classify, evaluate_hierarchical, train_tier1, train_tier2, train_two_tier
from .model_io import load_classifier, save_classifier, save_model
from .report import RunReport
from .training import GRAD_CHECK_TOLERANCE, TrainConfig, gradient_check_harness

__all__ = ["main", "entry_point", "load_config"]


def _parse_heights(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"heights must be comma-separated integers, got {text!r}") from None


# Every key a config file may set, with its parser. Names match the flags.
CONFIG_KEYS = {
    "seed": int,
    "epochs": int,
    "lr": float,
    "batch_size": int,
    "filters": int,
    "hidden": int,
    "max_len": int,
    "optimizer": str,
    "dropout": float,
    "pool_size": int,
    "conv_activation": str,
    "heights": _parse_heights,
    "val_fraction": float,
}

_TRAIN_DEFAULTS = {
    "seed": 0,
    "epochs": 20,
    "lr": 1e-3,
    "batch_size": 50,
    "filters": 100,
    "hidden": 128,
    "max_len": 40,
    "optimizer": "adam",
    "dropout": 0.5,
    "pool_size": 2,
    "conv_activation": "tanh",
    "heights": (2, 3, 4, 5),
    "val_fraction": 0.0,
}

# Flags that override config-file values when given explicitly.
_TRAIN_FLAG_KEYS = ("seed", "epochs", "lr", "batch_size", "filters", "hidden", "max_len")


def load_config(path) -> dict:
    """Parse a flat key=value config file; '#' starts a comment."""
    path = Path(path)
    values = {}
    for line_number, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: line {line_number}: expected key=value, got {raw!r}")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(
                f"{path}: line {line_number}: unknown config key {key!r}; "
                f"valid keys: {', '.join(sorted(CONFIG_KEYS))}"
            )
        try:
            values[key] = CONFIG_KEYS[key](value)
        except (ValueError, TypeError):
            raise ConfigError(
                f"{path}: line {line_number}: bad value {value!r} for key {key!r}"
            ) from None
    return values


def _resolve_train_config(args) -> TrainConfig:
    values = dict(_TRAIN_DEFAULTS)
    if args.config:
        values.update(load_config(args.config))
    for key in _TRAIN_FLAG_KEYS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    try:
        return TrainConfig(
            learning_rate=values["lr"],
            batch_size=values["batch_size"],
            epochs=values["epochs"],
            optimizer=values["optimizer"],
            seed=values["seed"],
            filters=values["filters"],
            hidden=values["hidden"],
            pool_size=values["pool_size"],
            dropout=values["dropout"],
            max_len=values["max_len"],
            conv_activation=values["conv_activation"],
            heights=values["heights"],
            val_fraction=values["val_fraction"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _epoch_line(name: str, stats) -> str:
    line = (
        f"{name} epoch {stats.epoch}: loss {stats.loss:.4f} "
        f"train acc {stats.train_accuracy:.2%}"
    )
    if stats.val_accuracy is not None:
        line += f" val acc {stats.val_accuracy:.2%}"
    return line


def cmd_train(args) -> int:
    config = _resolve_train_config(args)
    records = load_dataset(args.train_file)
    table1 = load_embeddings(args.embeddings)
    table2 = load_embeddings(args.embeddings_tier2) if args.embeddings_tier2 else table1
    model_dir = Path(args.model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)

    if args.tier1_only:
        model, _ = train_tier1(
            records,
            table1,
            config,
            on_epoch=lambda stats: print(_epoch_line("tier1", stats)),
        )
        save_model(
            model_dir / "tier1.qcnn", model, kind="tier1", max_len=config.max_len
        )
        print(f"wrote {model_dir / 'tier1.qcnn'}")
    elif args.tier2_only:
        coarse = resolve_coarse_label(args.tier2_only)
        model, _ = train_tier2(
            records,
            coarse,
            table2,
            config,
            on_epoch=lambda stats: print(_epoch_line(f"tier2-{coarse.lower()}", stats)),
        )
        file_path = model_dir / f"tier2-{coarse.lower()}.qcnn"
        save_model(
            file_path, model, kind="tier2", max_len=config.max_len, coarse=coarse
        )
        print(f"wrote {file_path}")
    else:
        classifier = train_two_tier(
            records,
            table1,
            config,
            tier2_table=table2,
            on_epoch=lambda name, stats: print(_epoch_line(name, stats)),
        )
        save_classifier(model_dir, classifier)
        print(f"wrote 7 model files to {model_dir}")
    return 0


def cmd_eval(args) -> int:
    classifier = load_classifier(args.model_dir)
    table1 = load_embeddings(args.embeddings)
    table2 = load_embeddings(args.embeddings_tier2) if args.embeddings_tier2 else table1
    records = load_dataset(args.test_file, taxonomy=classifier.taxonomy)
    metrics = evaluate_hierarchical(classifier, records, table1, table2)
    report = RunReport.from_metrics(metrics, classifier.taxonomy)
    print(report.to_text())
    if args.report_json:
        Path(args.report_json).write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
        )
        print(f"wrote {args.report_json}")
    return 0


def cmd_predict(args) -> int:
    classifier = load_classifier(args.model_dir)
    table1 = load_embeddings(args.embeddings)
    table2 = load_embeddings(args.embeddings_tier2) if args.embeddings_tier2 else table1
    if args.text:
        questions = [text for text in args.text if text.strip()]
    else:
        questions = [line for line in sys.stdin.read().splitlines() if line.strip()]
    if not questions:
        print("no input questions: pass --text or pipe one question per line", file=sys.stderr)
        return 1
    for question in questions:
        coarse, fine = classify(classifier, question, table1, table2)
        print(f"{coarse}\t{fine}")
    return 0


def cmd_gradcheck(args) -> int:
    worst = gradient_check_harness(trials=args.trials, seed=args.seed)
    passed = worst < GRAD_CHECK_TOLERANCE
    verdict = "OK" if passed else "FAIL"
    print(
        f"worst relative error: {worst:.3e} "
        f"(tolerance {GRAD_CHECK_TOLERANCE:.0e}): {verdict}"
    )
    return 0 if passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qclass",
        description="Train and run the two-tier question-type classifier.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="train models and write them to a directory")
    train.add_argument("--train-file", required=True, help="labeled question file")
    train.add_argument("--embeddings", required=True, help="word-vector text file")
    train.add_argument("--embeddings-tier2", help="separate word vectors for the fine models")
    train.add_argument("--model-dir", required=True, help="output directory for model files")
    train.add_argument("--config", help="key=value config file")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--batch-size", type=int, default=None)
    train.add_argument("--filters", type=int, default=None)
    train.add_argument("--hidden", type=int, default=None)
    train.add_argument("--max-len", type=int, default=None)
    only = train.add_mutually_exclusive_group()
    only.add_argument("--tier1-only", action="store_true", help="train just the coarse router")
    only.add_argument(
        "--tier2-only",
        metavar="COARSE",
        help="train just one coarse category's fine model",
    )
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("eval", help="evaluate a saved classifier on a test file")
    evaluate.add_argument("--test-file", required=True, help="labeled question file")
    evaluate.add_argument("--embeddings", required=True)
    evaluate.add_argument("--embeddings-tier2")
    evaluate.add_argument("--model-dir", required=True, help="directory of model files")
    evaluate.add_argument("--report-json", help="also write the report as JSON to this path")
    evaluate.set_defaults(handler=cmd_eval)

    predict = commands.add_parser("predict", help="classify questions from stdin or --text")
    predict.add_argument("--embeddings", required=True)
    predict.add_argument("--embeddings-tier2")
    predict.add_argument("--model-dir", required=True)
    predict.add_argument(
        "--text",
        action="append",
        help="a question to classify (repeatable); without it, stdin is read",
    )
    predict.set_defaults(handler=cmd_predict)

    gradcheck = commands.add_parser(
        "gradcheck", help="compare analytic gradients against finite differences"
    )
    gradcheck.add_argument("--trials", type=int, default=20)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.set_defaults(handler=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QclassError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
