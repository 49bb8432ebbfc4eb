"""Command-line entry point: ``adaptrust <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or validation error, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from .core import UsagePattern
from .errors import AdaptrustError
from .evalharness import EvalConfig, evaluate_multiuse, evaluate_pipeline
from .indicators import DEFAULT_EPSILON, detect_indicator_count
from .models import DEFAULT_HIDDEN, fit_model_pair
from .multiuse import METHODS, multi_use_trust, usage_significance
from .nnet import TrainConfig
from .synth.generator import GeneratorConfig, generate_dataset
from .synth.storage import (
    DatasetPaths,
    load_dataset,
    load_model_pair,
    load_services,
    load_usages,
    save_dataset,
    save_model_pair,
)
from .trust import assess

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2
_DEFAULT_TRAIN = TrainConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for I/O here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_float(flag):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{flag} must be > 0, got {text}")
        return v
    return conv


def _bounded_float(flag, lo, hi, lo_open=False, hi_open=False):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
        ok_lo = v > lo if lo_open else v >= lo
        ok_hi = hi is None or (v < hi if hi_open else v <= hi)
        if not (ok_lo and ok_hi):
            raise argparse.ArgumentTypeError(f"{flag} out of range, got {text}")
        return v
    return conv


def _positive_int(flag):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1, got {text}")
        return v
    return conv


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _comma_list(text):
    items = [t.strip() for t in text.split(",")]
    if not all(items):
        raise argparse.ArgumentTypeError(f"empty item in {text!r}")
    return items


def _data_flags(p, required=True):
    p.add_argument("--ratings", required=required, help="ratings CSV (service_id,usage_id,rating)")
    p.add_argument("--services", required=required, help="services JSON (schema and profiles)")
    p.add_argument("--usages", required=required, help="usages JSON")


def _train_flags(p):
    p.add_argument("--epsilon", type=_positive_float("--epsilon"), default=DEFAULT_EPSILON,
                   help="rating-gap threshold on the unit scale (default %(default)s)")
    p.add_argument("--epochs", type=_positive_int("--epochs"), default=_DEFAULT_TRAIN.epochs,
                   help="training epochs (default %(default)s)")
    p.add_argument("--learning-rate", type=_bounded_float("--learning-rate", 0, None), default=_DEFAULT_TRAIN.learning_rate,
                   help="SGD step size (default %(default)s)")
    p.add_argument("--hidden", type=_positive_int("--hidden"), default=DEFAULT_HIDDEN,
                   help="hidden units per network (default %(default)s)")
    p.add_argument("--batch-size", type=_positive_int("--batch-size"), default=_DEFAULT_TRAIN.batch_size,
                   help="mini-batch size (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adaptrust", description="Usage-adaptive trust for crowdsourced IoT services.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect-indicators", help="infer the number of trust indicators")
    _data_flags(p)
    p.add_argument("--epsilon", type=_positive_float("--epsilon"), default=DEFAULT_EPSILON,
                   help="rating-gap threshold on the unit scale (default %(default)s)")
    p.add_argument("--out", help="write count and partition as JSON here")

    p = sub.add_parser("train", help="detect indicators and train both models")
    _data_flags(p)
    _train_flags(p)
    p.add_argument("--model-dir", required=True, help="directory to write the model pair to")
    p.add_argument("--seed", type=int, default=42, help="random seed (default %(default)s)")

    p = sub.add_parser("assess", help="trust of a service for one usage or a usage pattern")
    p.add_argument("--model-dir", required=True, help="directory written by 'train'")
    p.add_argument("--services", help="services JSON (default: the copy in --model-dir)")
    p.add_argument("--usages", help="usages JSON (default: the copy in --model-dir)")
    p.add_argument("--service-id", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--usage-id", help="single usage")
    g.add_argument("--pattern", type=_comma_list, help="comma-separated usage ids")
    p.add_argument("--aggregation", choices=METHODS, default="weighted",
                   help="multi-use aggregation (default %(default)s)")
    p.add_argument("--durations", type=_comma_list,
                   help="comma-separated minutes per pattern usage (weighted only; default: profile durations)")

    p = sub.add_parser("generate", help="write a synthetic dataset with ground truth")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--indicators", type=_positive_int("--indicators"), default=2, help="indicator count (default %(default)s)")
    p.add_argument("--noise", type=_bounded_float("--noise", 0, None), default=0.0,
                   help="Gaussian noise std on the unit trust scale (default %(default)s)")
    p.add_argument("--num-services", type=_positive_int("--num-services"), default=200)
    p.add_argument("--num-usages", type=_positive_int("--num-usages"), default=None,
                   help="default: 4 per indicator")
    p.add_argument("--num-sessions", type=_nonneg_int, default=0, help="multi-use sessions to add (default 0)")
    p.add_argument("--seed", type=int, default=42, help="random seed (default %(default)s)")

    p = sub.add_parser("evaluate", help="train/test evaluation over the 10 trust levels")
    _data_flags(p)
    _train_flags(p)
    p.add_argument("--split", type=_bounded_float("--split", 0, 1, True, True), default=0.8,
                   help="training share of the ratings (default %(default)s)")
    p.add_argument("--sessions", help="sessions JSON; with it, multi-use sessions are scored instead")
    p.add_argument("--aggregation", choices=METHODS, default="weighted",
                   help="multi-use aggregation when --sessions is given (default %(default)s)")
    p.add_argument("--seed", type=int, default=42, help="random seed (default %(default)s)")
    p.add_argument("--out", help="write the report as JSON here")
    return parser


def _paths(args, sessions=None) -> DatasetPaths:
    return DatasetPaths(Path(args.ratings), Path(args.services), Path(args.usages), Path(sessions) if sessions else None)


def _eval_config(args) -> EvalConfig:
    train = TrainConfig(args.learning_rate, args.epochs, args.batch_size, args.seed)
    return EvalConfig(getattr(args, "split", 0.8), args.seed, args.epsilon, args.hidden, train)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_detect(args, out) -> int:
    ds = load_dataset(_paths(args))
    count, partition = detect_indicator_count(ds, args.epsilon)
    print(f"indicators: {count}", file=out)
    blocks = [sorted(b.members) for b in partition.blocks]
    for k, members in enumerate(blocks, 1):
        print(f"  {k}: {' '.join(members)}", file=out)
    if args.out:
        _write_json(args.out, {"indicator_count": count, "epsilon": args.epsilon, "partition": blocks})
    return EXIT_OK


def cmd_train(args, out) -> int:
    ds = load_dataset(_paths(args))
    cfg = _eval_config(args)
    _, partition = detect_indicator_count(ds, cfg.epsilon)
    pair = fit_model_pair(ds, partition, cfg.train, cfg.hidden)
    save_model_pair(pair, args.model_dir)
    # profiles travel with the model so that 'assess' needs only --model-dir
    shutil.copyfile(args.services, Path(args.model_dir) / "services.json")
    shutil.copyfile(args.usages, Path(args.model_dir) / "usages.json")
    print(f"indicators: {pair.indicator_count}", file=out)
    print(f"model written to {args.model_dir}", file=out)
    return EXIT_OK


def cmd_assess(args, out) -> int:
    model_dir = Path(args.model_dir)
    pair = load_model_pair(model_dir)
    _, services = load_services(args.services or model_dir / "services.json")
    usages = {u.id: u for u in load_usages(args.usages or model_dir / "usages.json")}
    service = next((s for s in services if s.id == args.service_id), None)
    if service is None:
        raise UsageError(f"--service-id: unknown service {args.service_id!r}")
    wanted = [args.usage_id] if args.usage_id else args.pattern
    missing = [u for u in wanted if u not in usages]
    if missing:
        flag = "--usage-id" if args.usage_id else "--pattern"
        raise UsageError(f"{flag}: unknown usage(s) {', '.join(missing)}")

    if args.usage_id:
        score = assess(pair, service, usages[args.usage_id])
    else:
        significances = None
        if args.durations is not None:
            if args.aggregation != "weighted":
                raise UsageError("--durations: only meaningful with --aggregation weighted")
            if len(args.durations) != len(wanted):
                raise UsageError(f"--durations: {len(args.durations)} values for {len(wanted)} usages in --pattern")
            try:
                significances = usage_significance([float(d) for d in args.durations])
            except ValueError as exc:
                raise UsageError(f"--durations: {exc}") from None
        pattern = UsagePattern(tuple(wanted), significances)
        score = multi_use_trust(pair, service, pattern, args.aggregation, usages)
    print(f"trust: {score.value:.6f}", file=out)
    print(f"level: {score.level}", file=out)
    return EXIT_OK


def cmd_generate(args, out) -> int:
    num_usages = args.num_usages if args.num_usages is not None else 4 * args.indicators
    cfg = GeneratorConfig(
        indicator_count=args.indicators,
        num_services=args.num_services,
        num_usages=num_usages,
        noise_std=args.noise,
        seed=args.seed,
        num_sessions=args.num_sessions,
    )
    ds, truth = generate_dataset(cfg)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    save_dataset(ds, DatasetPaths.in_dir(args.out), truth)
    print(
        f"wrote {len(ds.services)} services, {len(ds.usages)} usages, {len(ds.ratings)} ratings, "
        f"{len(ds.sessions)} sessions to {args.out}",
        file=out,
    )
    return EXIT_OK


def cmd_evaluate(args, out) -> int:
    ds = load_dataset(_paths(args, args.sessions))
    cfg = _eval_config(args)
    if args.sessions:
        report = evaluate_multiuse(ds, args.aggregation, cfg)
    else:
        report = evaluate_pipeline(ds, cfg)
    print(report.table(), file=out)
    if args.out:
        _write_json(args.out, report.to_json())
    return EXIT_OK


COMMANDS = {
    "detect-indicators": cmd_detect,
    "train": cmd_train,
    "assess": cmd_assess,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=err)
        return EXIT_IO
    except (AdaptrustError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
