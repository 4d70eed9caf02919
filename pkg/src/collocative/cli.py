"""``collo`` command line: one subcommand per pipeline stage.

Exit status is 0 on success, 1 on usage errors (bad flags, unreadable config)
and 2 on data errors (missing or malformed inputs, failed stages).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import pipeline
from .config import RunConfig, load_config
from .errors import CollocativeError, ConfigParseError, StageError, UnknownSubcommand, UsageError

SUBCOMMANDS = ("synth", "train", "eval", "saliency", "decode", "rank", "trees", "report")
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    parser = _Parser(prog="collo", description="Collocative ECG learning pipeline.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}",
                                parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI run configuration")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="root seed (overrides [cv] seed)")
        p.add_argument("--manifest", help="dataset manifest (overrides [data] manifest)")
        if name == "synth":
            p.add_argument("--count", type=int, help="number of records to generate")
        if name == "train":
            p.add_argument("--epochs", type=int)
            p.add_argument("--folds", type=int)
        if name == "trees":
            p.add_argument("--t-max", type=int, dest="t_max")
            p.add_argument("--h-max", type=int, dest="h_max")
            p.add_argument("--evaluator", choices=("accuracy", "f1"))
    return parser


def _configure_logging():
    level = os.environ.get("COLLO_LOG", "quiet").strip().lower()
    if level not in LOG_LEVELS:
        raise UsageError(f"COLLO_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logger = logging.getLogger("collocative")
    logger.handlers[:] = []
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(LOG_LEVELS[level])
    logger.propagate = False


def _config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {"out_dir": args.out, "seed": args.seed, "manifest": args.manifest}
    for key in ("count", "epochs", "folds", "t_max", "h_max", "evaluator"):
        if hasattr(args, key):
            over["synth_count" if key == "count" else key] = getattr(args, key)
    try:
        return cfg.with_overrides(**over)
    except CollocativeError as exc:
        raise ConfigParseError(str(exc)) from exc


def run_subcommand(argv):
    """Execute one subcommand; returns the summary line."""
    argv = list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        build_parser().parse_args(argv or ["--help"])
    if argv[0] not in SUBCOMMANDS:
        raise UnknownSubcommand(f"unknown subcommand {argv[0]!r}; expected one of {', '.join(SUBCOMMANDS)}")
    args = build_parser().parse_args(argv)
    _configure_logging()
    cfg = _config(args)
    cmd = args.command
    if cmd == "synth":
        with pipeline.stage("synth"):
            manifest = pipeline.synthesize_dataset(cfg)
        return f"synth: wrote {cfg.synth_count} records and {manifest}"
    with pipeline.stage("ingest"):
        pipeline.write_run_header(cfg)
    if cmd == "train":
        paths = pipeline.stage_train(cfg)
        return f"train: wrote {len(paths)} checkpoints to {cfg.out_dir / 'checkpoints'}"
    if cmd == "eval":
        cv = pipeline.stage_eval(cfg)
        return (f"eval: accuracy {cv.mean('accuracy'):.2f} +/- {cv.std('accuracy'):.2f} over "
                f"{cfg.folds} folds -> {cfg.out_dir / 'metrics.csv'}")
    if cmd == "saliency":
        maps = pipeline.stage_saliency(cfg)
        return f"saliency: class means for {', '.join(maps) or 'no class'} in {cfg.out_dir / 'saliency'}"
    if cmd == "decode":
        pipeline.stage_decode(cfg)
        return f"decode: genre ratings in {cfg.out_dir / 'decode'}"
    if cmd == "rank":
        ranking = pipeline.stage_rank(cfg)
        top = "|".join(ranking.comparative[0][0])
        return f"rank: top unary {ranking.unary[0][0]}, top comparative {top}"
    if cmd == "trees":
        res = pipeline.stage_trees(cfg)
        best = res["comparative"]["tree"]
        return (f"trees: comparative tree t={len(best.attributes)} h={best.height} "
                f"{cfg.evaluator} {best.score:.4f} -> {cfg.out_dir / 'trees'}")
    text = pipeline.stage_report(cfg)
    return "report: " + text.splitlines()[0] + f" -> {cfg.out_dir / 'report.txt'}"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        print(run_subcommand(argv))
        return 0
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"collo: error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"collo: error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, UsageError) else 2
    except CollocativeError as exc:
        print(f"collo: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
