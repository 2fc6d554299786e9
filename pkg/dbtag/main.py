"""
dbtag command-line interface.

Data goes to stdout (or --out); logs and skip reports go to stderr.
Exit codes: 0 success, 1 usage, 2 bad input, 3 internal invariant violation.
"""

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

import config
from annotation_service import AnnotationService
from calibration import augment, calibrate
from dataset import (
    DatasetFormat,
    compare_to_reference,
    label_stats,
    load,
    load_gold,
    merge_training_set,
    read_annotations,
    read_labels,
    write_annotations,
    write_jsonl,
)
from errors import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    CalibrationError,
    ConfigError,
    ConsistencyError,
    DatasetFormatError,
    LabelAlignmentError,
    SqlParseError,
)
from metrics import ClassGrouping, score_corpus
from schemas import CalibrationReport, ExtractedEntity, ExtractedRecord, TokenizedRecord
from similarity import SimilarityConfig, SimilarityMeasure
from sql_entities import entities_from_sql
from synthetic import synthetic_corpus
from tokenizer import tokenize

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with EXIT_USAGE instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threshold(value: str) -> float:
    try:
        threshold = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid threshold {value!r}")
    if not 0.0 < threshold <= 1.0:
        raise argparse.ArgumentTypeError("threshold must be in (0, 1]")
    return threshold


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError("value must be at least 1")
    return number


def _jobs(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {value!r}")
    if number == 0:
        raise argparse.ArgumentTypeError("jobs must be non-zero (-1 uses every CPU)")
    return number


def _emit_json(payload, out: Optional[str]):
    text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise DatasetFormatError(f"cannot write file: {e.strerror}", path=out) from e


def _emit_records(records, out: Optional[str]):
    write_jsonl(records, path=out, stream=sys.stdout)


def _report_skips(skipped):
    for entry in skipped:
        sys.stderr.write(entry.model_dump_json() + "\n")


def cmd_tokenize(args) -> int:
    pairs = load(args.file, args.format)
    _emit_records([TokenizedRecord(id=pair.id, tokens=tokenize(pair.question).texts) for pair in pairs], args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    records = []
    for pair in load(args.file, args.format):
        try:
            entities = entities_from_sql(pair.sql)
        except SqlParseError as e:
            raise e.with_record(pair.id) from e
        records.append(ExtractedRecord(
            id=pair.id,
            entities=[ExtractedEntity(text=entity.text, type=entity.entity_type.value) for entity in entities.entities],
        ))
    _emit_records(records, args.out)
    return EXIT_OK


def cmd_annotate(args) -> int:
    pairs = load(args.file, args.format)
    config_ = SimilarityConfig(measure=args.measure, threshold=args.threshold)
    records, skipped = AnnotationService(config_, args.max_span, args.jobs).run(pairs)
    if skipped and not args.skip_invalid:
        first = skipped[0]
        logger.error(f"Aborting: {first.reason} (use --skip-invalid to skip unparseable records)")
        return EXIT_INPUT
    write_annotations(records, path=args.out, stream=sys.stdout)
    _report_skips(skipped)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    gold = load_gold(args.gold, require_sql=True)
    report = calibrate(gold, args.max_span, args.jobs)
    _emit_json(report.model_dump(mode="json"), args.out)
    return EXIT_OK


def _read_calibration(path) -> CalibrationReport:
    try:
        with open(path, encoding="utf-8") as f:
            return CalibrationReport.model_validate_json(f.read())
    except OSError as e:
        raise DatasetFormatError(f"cannot read file: {e.strerror}", path=path) from e
    except ValidationError as e:
        raise DatasetFormatError(f"not a calibration report: {e.errors()[0]['msg']}", path=path) from e


def cmd_augment(args) -> int:
    report = _read_calibration(args.calibration)
    pairs = load(args.file, args.format)
    records, skipped = augment(pairs, report.best.config, args.max_span, args.jobs)
    write_annotations(records, path=args.out, stream=sys.stdout)
    _report_skips(skipped)
    logger.info(f"Augmented {len(records)} records with {report.best.config}; skipped {len(skipped)}")
    return EXIT_OK


def _groupings(value: str) -> List[ClassGrouping]:
    return list(ClassGrouping) if value == "all" else [ClassGrouping(value)]


def cmd_eval(args) -> int:
    gold = load_gold(args.gold)
    predicted = read_labels(args.pred)
    missing = [example.id for example in gold if example.id not in predicted]
    if missing:
        raise DatasetFormatError(f"no prediction for gold record(s) {', '.join(missing[:5])}", path=args.pred)
    pairs = [(example.labels, predicted[example.id]) for example in gold]
    ids = [example.id for example in gold]

    reports = {grouping.title: score_corpus(pairs, grouping, ids).to_json_dict() for grouping in _groupings(args.grouping)}
    payload = next(iter(reports.values())) if len(reports) == 1 else reports
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    frame = label_stats({path: read_labels(path).values() for path in args.files})
    comparison = compare_to_reference(frame, args.files[0]) if args.reference else None

    if args.json:
        payload: Dict[str, dict] = {
            path: {
                label: {"tokens": int(frame.loc[label, (path, "Tokens")]), "percent": float(frame.loc[label, (path, "%")])}
                for label in frame.index
            }
            for path in args.files
        }
        if comparison is not None:
            payload["reference"] = {
                label: {
                    "observed": float(row.observed),
                    "reference": float(row.reference),
                    "delta": float(row.delta),
                    "within_tolerance": bool(row.within_tolerance),
                }
                for label, row in comparison.iterrows()
            }
        _emit_json(payload, None)
        return EXIT_OK

    sys.stdout.write(frame.to_string() + "\n")
    if comparison is not None:
        sys.stdout.write("\n" + comparison.to_string() + "\n")
    return EXIT_OK


def cmd_merge(args) -> int:
    human = load_gold(args.human)
    synthetic = read_annotations(args.synthetic)
    holdout = load_gold(args.holdout) if args.holdout else []
    _emit_records(merge_training_set(human, synthetic, holdout), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    _emit_records(synthetic_corpus(args.n, args.seed, args.invalid_rate), args.out)
    return EXIT_OK


def build_parser() -> CliParser:
    parser = CliParser(prog="dbtag", description="Database entity annotation for text-to-SQL questions")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add_input(sub):
        sub.add_argument("file", help="question/SQL dataset")
        sub.add_argument("--format", choices=[fmt.value for fmt in DatasetFormat],
                         default=DatasetFormat.GENERIC_JSONL.value, help="input layout (default jsonl)")

    def add_solver(sub, jobs=True):
        sub.add_argument("--max-span", type=_positive_int, default=config.MAX_SPAN_TOKENS,
                         help=f"longest candidate span in tokens (default {config.MAX_SPAN_TOKENS})")
        if jobs:
            sub.add_argument("--jobs", type=_jobs, default=config.JOBS, help="worker processes (-1: all CPUs)")

    sub = commands.add_parser("tokenize", help="tokenize questions")
    add_input(sub)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_tokenize)

    sub = commands.add_parser("extract", help="extract database entities from SQL")
    add_input(sub)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_extract)

    sub = commands.add_parser("annotate", help="annotate questions with one similarity configuration")
    add_input(sub)
    sub.add_argument("--measure", choices=[measure.value for measure in SimilarityMeasure], required=True)
    sub.add_argument("--threshold", type=_threshold, required=True)
    add_solver(sub)
    sub.add_argument("--skip-invalid", action="store_true", help="skip records whose SQL does not parse")
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_annotate)

    sub = commands.add_parser("calibrate", help="grid-search the annotator against gold labels")
    sub.add_argument("--gold", required=True)
    add_solver(sub)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_calibrate)

    sub = commands.add_parser("augment", help="annotate a corpus with a calibrated configuration")
    add_input(sub)
    sub.add_argument("--calibration", required=True, help="report written by `calibrate`")
    add_solver(sub)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_augment)

    sub = commands.add_parser("eval", help="token-level precision/recall/F1 against gold labels")
    sub.add_argument("--gold", required=True)
    sub.add_argument("--pred", required=True)
    sub.add_argument("--grouping", choices=["4", "3", "2", "all"], default="4")
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_eval)

    sub = commands.add_parser("stats", help="label distribution of annotated files")
    sub.add_argument("files", nargs="+")
    sub.add_argument("--reference", action="store_true", help="compare with the published synthetic-train shares")
    sub.add_argument("--json", action="store_true")
    sub.set_defaults(handler=cmd_stats)

    sub = commands.add_parser("merge", help="combine human and synthetic annotations into a training set")
    sub.add_argument("--human", required=True)
    sub.add_argument("--synthetic", required=True)
    sub.add_argument("--holdout")
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_merge)

    sub = commands.add_parser("synth", help="generate a synthetic question/SQL corpus")
    sub.add_argument("--n", type=_positive_int, required=True)
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--invalid-rate", type=float, default=0.0)
    sub.add_argument("--out")
    sub.set_defaults(handler=cmd_synth)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    config.configure_logging()
    try:
        config.validate_settings()
    except ConfigError as e:
        logger.error(str(e))
        sys.stderr.write(f"dbtag: error: {e}\n")
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        return args.handler(args)
    except (DatasetFormatError, SqlParseError, LabelAlignmentError, CalibrationError, OSError) as e:
        logger.error(str(e))
        sys.stderr.write(f"dbtag: error: {e}\n")
        return EXIT_INPUT
    except (ConsistencyError, AssertionError) as e:
        logger.error(f"Internal invariant violated: {e}")
        sys.stderr.write(f"dbtag: internal error: {e}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
