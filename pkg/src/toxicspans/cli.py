"""Command line interface.

Subcommands cover the full pipeline: building lexicons, training a model,
predicting spans, scoring predictions, and combining prediction files by
majority vote. Exit codes: 0 on success, 1 for usage problems, 2 for data
errors, 3 for numerical failures during training.

Options with defaults can also come from a config file of ``key = value``
lines (``#`` starts a comment line); explicit flags win over the file, and
keys the active subcommand does not use are ignored. File paths are always
given as flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Sequence

from . import __version__
from .corpus import PredictionRecord, parse_dataset, parse_predictions, write_predictions
from .crf import CrfModel, predict_offsets
from .errors import DataError, NumericalError
from .evaluation import evaluate_corpus, format_report, majority_vote
from .lexicon import (
    Lexicon,
    load_lexicon,
    match_spans,
    mine_annotated_words,
    read_word_list,
    save_lexicon,
)
from .spans import SpanSet
from .tokenizer import DEFAULT_INTRA_WORD_CHARS, Tokenizer
from .training import TrainConfig, train

logger = logging.getLogger(__name__)

_TRUE_WORDS = frozenset({"1", "true", "yes", "on"})
_FALSE_WORDS = frozenset({"0", "false", "no", "off"})


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems through exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _parse_bool(raw: str) -> bool:
    folded = raw.strip().lower()
    if folded in _TRUE_WORDS:
        return True
    if folded in _FALSE_WORDS:
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


# Per-subcommand options that may come from the config file, with their
# converters and hard defaults. A default of None defers the decision to
# the handler (predict inherits gap_fill from the model).
_HYPERPARAMS: dict[str, tuple[Callable[[str], object], object]] = {
    "learning_rate": (float, 1e-2),
    "batch_size": (int, 16),
    "max_epochs": (int, 50),
    "l2_lambda": (float, 1e-4),
    "validation_fraction": (float, 0.2),
    "early_stop_patience": (int, 10),
    "seed": (int, 0),
    "gap_fill": (_parse_bool, True),
    "intra_word_chars": (str, DEFAULT_INTRA_WORD_CHARS),
}

_CONFIGURABLE: dict[str, dict[str, tuple[Callable[[str], object], object]]] = {
    "lexicon-build": {
        "intra_word_chars": (str, DEFAULT_INTRA_WORD_CHARS),
    },
    "train": dict(_HYPERPARAMS),
    "predict": {
        "gap_fill": (_parse_bool, None),
        "match_censored": (_parse_bool, False),
        "intra_word_chars": (str, DEFAULT_INTRA_WORD_CHARS),
    },
    "evaluate": {},
    "ensemble": {},
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="toxicspans", description="Detect toxic text spans.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log progress details to stderr"
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    lex = commands.add_parser("lexicon-build", help="assemble a toxic word list")
    lex.add_argument("--out", required=True, help="path for the word list written")
    lex.add_argument(
        "--from", dest="word_lists", action="append", metavar="PATH",
        help="word list file to include, one word per line (repeatable)",
    )
    lex.add_argument("--mine", metavar="PATH", help="annotated dataset to mine words from")
    lex.add_argument("--intra-word-chars", help="extra characters allowed inside words")
    lex.add_argument("--config", help="config file with key = value defaults")

    tr = commands.add_parser("train", help="fit a tagging model on annotated posts")
    tr.add_argument("--data", required=True, help="annotated training dataset (CSV)")
    tr.add_argument("--out", required=True, help="path for the model file written")
    tr.add_argument("--lexicon", help="word list adding a membership feature")
    tr.add_argument("--learning-rate", type=float)
    tr.add_argument("--batch-size", type=int)
    tr.add_argument("--max-epochs", type=int)
    tr.add_argument("--l2-lambda", type=float)
    tr.add_argument("--validation-fraction", type=float)
    tr.add_argument("--early-stop-patience", type=int)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--gap-fill", action=argparse.BooleanOptionalAction)
    tr.add_argument("--intra-word-chars")
    tr.add_argument("--config")

    pr = commands.add_parser("predict", help="tag posts and write predictions")
    pr.add_argument("--data", required=True, help="dataset of posts to tag (CSV)")
    pr.add_argument("--out", required=True, help="path for the predictions written")
    pr.add_argument(
        "--method", required=True, choices=("crf", "lexicon"), help="tagging method"
    )
    pr.add_argument("--model", help="model file (required with --method crf)")
    pr.add_argument("--lexicon", help="word list file")
    pr.add_argument("--gap-fill", action=argparse.BooleanOptionalAction)
    pr.add_argument("--match-censored", action=argparse.BooleanOptionalAction)
    pr.add_argument("--intra-word-chars")
    pr.add_argument("--config")

    ev = commands.add_parser("evaluate", help="score predictions against gold spans")
    ev.add_argument("--pred", required=True, help="prediction file (CSV)")
    ev.add_argument("--gold", required=True, help="gold dataset (CSV)")
    ev.add_argument("--config")

    en = commands.add_parser("ensemble", help="combine prediction files by majority vote")
    en.add_argument(
        "--pred", action="append", required=True, metavar="PATH",
        help="prediction file to include (repeatable)",
    )
    en.add_argument("--out", required=True, help="path for the combined predictions")
    en.add_argument("--config")

    return parser


def _read_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as stream:
        for lineno, line in enumerate(stream, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, value = stripped.partition("=")
            if not sep or not key.strip():
                raise _UsageError(f"{path}:{lineno}: expected 'key = value'")
            entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _merge_config(args: argparse.Namespace) -> None:
    options = _CONFIGURABLE[args.command]
    values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    for dest, (convert, default) in options.items():
        if getattr(args, dest, None) is not None:
            continue
        if dest in values:
            try:
                setattr(args, dest, convert(values[dest]))
            except ValueError as exc:
                raise _UsageError(f"config key {dest}: {exc}") from None
        else:
            setattr(args, dest, default)


def _cmd_lexicon_build(args: argparse.Namespace) -> int:
    lexicon = Lexicon()
    for path in args.word_lists or []:
        added = lexicon.add_words(read_word_list(path), source=path)
        logger.info("%s: %d new words", path, added)
    if args.mine:
        posts = parse_dataset(args.mine)
        tokenizer = Tokenizer(args.intra_word_chars)
        added = lexicon.add_words(
            mine_annotated_words(posts, tokenizer), source=f"mined:{args.mine}"
        )
        logger.info("%s: %d new words mined", args.mine, added)
    save_lexicon(lexicon, args.out)
    logger.info("wrote %d words to %s", len(lexicon), args.out)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    try:
        config = TrainConfig(
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            max_epochs=args.max_epochs,
            l2_lambda=args.l2_lambda,
            validation_fraction=args.validation_fraction,
            early_stop_patience=args.early_stop_patience,
            seed=args.seed,
            gap_fill=args.gap_fill,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    posts = parse_dataset(args.data)
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    model = train(posts, config, lexicon=lexicon, tokenizer=Tokenizer(args.intra_word_chars))
    model.save(args.out)
    logger.info(
        "trained on %d posts for %d epochs, model written to %s",
        len(posts), model.epochs_run, args.out,
    )
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    posts = parse_dataset(args.data)
    records = []
    if args.method == "crf":
        if not args.model:
            raise _UsageError("--model is required with --method crf")
        model = CrfModel.load(args.model)
        lexicon = load_lexicon(args.lexicon) if args.lexicon else None
        for post in posts:
            spans = predict_offsets(model, post.text, lexicon, gap_fill=args.gap_fill)
            records.append(PredictionRecord(post.post_id, spans))
    else:
        if not args.lexicon:
            raise _UsageError("--lexicon is required with --method lexicon")
        lexicon = load_lexicon(args.lexicon)
        tokenizer = Tokenizer(args.intra_word_chars)
        for post in posts:
            spans = match_spans(lexicon, post.text, tokenizer, censored=args.match_censored)
            records.append(PredictionRecord(post.post_id, spans))
    write_predictions(records, args.out)
    logger.info("wrote predictions for %d posts to %s", len(records), args.out)
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    gold = parse_dataset(args.gold)
    predictions = parse_predictions(args.pred)
    report = evaluate_corpus(predictions, gold)
    sys.stdout.write(format_report(report))
    return 0


def _cmd_ensemble(args: argparse.Namespace) -> int:
    votes_per_file: list[dict[str, SpanSet]] = []
    id_order: list[str] = []
    for path in args.pred:
        by_id: dict[str, SpanSet] = {}
        for record in parse_predictions(path):
            if record.post_id in by_id:
                raise DataError(f"duplicate post id {record.post_id!r} in {path}")
            by_id[record.post_id] = record.spans
        votes_per_file.append(by_id)
        for post_id in by_id:
            if post_id not in id_order:
                id_order.append(post_id)
    records = []
    for post_id in id_order:
        votes = [by_id.get(post_id, SpanSet()) for by_id in votes_per_file]
        records.append(PredictionRecord(post_id, majority_vote(votes)))
    write_predictions(records, args.out)
    logger.info(
        "combined %d files over %d posts into %s", len(votes_per_file), len(records), args.out
    )
    return 0


_HANDLERS: dict[str, Callable[[argparse.Namespace], int]] = {
    "lexicon-build": _cmd_lexicon_build,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "ensemble": _cmd_ensemble,
}


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    # force so repeated in-process calls pick up the current verbosity
    # and whatever sys.stderr currently is
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        _merge_config(args)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())
