"""
Dataset input/output: benchmark loaders, gold files, annotated JSONL,
training-set merging and label statistics.
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ValidationError

from errors import DatasetFormatError, LabelAlignmentError
from models import GoldExample, Label, RawPair, tag_id_string
from schemas import AnnotatedRecord, TrainingRecord
from tokenizer import tokenize

logger = logging.getLogger(__name__)


class DatasetFormat(str, Enum):
    SPIDER_JSON = "spider"
    BIRD_JSON = "bird"
    GENERIC_JSONL = "jsonl"


# (question key, sql key) per format
_FIELDS = {
    DatasetFormat.SPIDER_JSON: ("question", "query"),
    DatasetFormat.BIRD_JSON: ("question", "SQL"),
    DatasetFormat.GENERIC_JSONL: ("question", "sql"),
}
_ID_KEYS = ("id", "question_id")

# Published label shares of the synthetic training split, in percent.
REFERENCE_SHARES = {"Table": 7.8, "Column": 13.6, "Value": 8.0, "O": 70.6}
REFERENCE_TOLERANCE = 3.0

_LABEL_NAMES = {Label.TABLE: "Table", Label.COLUMN: "Column", Label.VALUE: "Value", Label.NONE: "O"}


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetFormatError(f"cannot read file: {e.strerror}", path=path) from e
    except UnicodeDecodeError as e:
        raise DatasetFormatError(f"not valid UTF-8 at byte {e.start}", path=path) from e


def _json_objects(path, fmt: DatasetFormat) -> Iterable[Tuple[str, dict]]:
    """Yield (position description, object) pairs from a JSON array or JSONL file."""
    text = _read_text(path)
    if fmt is DatasetFormat.GENERIC_JSONL:
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetFormatError(f"malformed JSON: {e.msg}", path=path,
                                         position=f"line {line_no}, column {e.colno}") from e
            if not isinstance(obj, dict):
                raise DatasetFormatError("expected a JSON object", path=path, position=f"line {line_no}")
            yield f"line {line_no}", obj
        return

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"malformed JSON: {e.msg}", path=path,
                                 position=f"line {e.lineno}, column {e.colno}") from e
    if not isinstance(data, list):
        raise DatasetFormatError("expected a JSON array of objects", path=path)
    for index, obj in enumerate(data):
        if not isinstance(obj, dict):
            raise DatasetFormatError("expected a JSON object", path=path, position=f"record {index}")
        yield f"record {index}", obj


def _record_id(obj: dict, index: int) -> str:
    for key in _ID_KEYS:
        if obj.get(key) is not None:
            return str(obj[key])
    return str(index)


def load(path, fmt: DatasetFormat = DatasetFormat.GENERIC_JSONL) -> List[RawPair]:
    fmt = DatasetFormat(fmt)
    question_key, sql_key = _FIELDS[fmt]
    pairs = []
    for index, (position, obj) in enumerate(_json_objects(path, fmt)):
        missing = [key for key in (question_key, sql_key) if not obj.get(key)]
        if missing:
            raise DatasetFormatError(f"missing field(s) {', '.join(missing)}", path=path, position=position)
        try:
            pairs.append(RawPair(id=_record_id(obj, index), question=str(obj[question_key]), sql=str(obj[sql_key])))
        except ValidationError as e:
            raise DatasetFormatError(f"invalid record: {e.errors()[0]['msg']}", path=path, position=position) from e
    logger.info(f"Loaded {len(pairs)} pairs from {path} ({fmt.value})")
    return pairs


def load_gold(path, require_sql: bool = False) -> List[GoldExample]:
    """
    Read a gold JSONL file: {"id", "tokens"?, "question"?, "labels", "sql"?} per line.

    Records carrying only a question are tokenized here.
    """
    examples = []
    for index, (position, obj) in enumerate(_json_objects(path, DatasetFormat.GENERIC_JSONL)):
        if "labels" not in obj:
            raise DatasetFormatError("missing field labels", path=path, position=position)
        if "tokens" not in obj and not obj.get("question"):
            raise DatasetFormatError("missing field tokens (or question)", path=path, position=position)
        if require_sql and not obj.get("sql"):
            raise DatasetFormatError("missing field sql", path=path, position=position)
        tokens = obj["tokens"] if "tokens" in obj else tokenize(obj["question"]).texts
        try:
            examples.append(GoldExample(
                id=_record_id(obj, index),
                tokens=tokens,
                labels=obj["labels"],
                sql=obj.get("sql"),
                question=obj.get("question"),
            ))
        except ValidationError as e:
            raise DatasetFormatError(f"invalid record: {e.errors()[0]['msg']}", path=path, position=position) from e
        except LabelAlignmentError as e:
            raise DatasetFormatError(str(e), path=path, position=position) from e
    logger.info(f"Loaded {len(examples)} gold examples from {path}")
    return examples


def write_jsonl(records: Iterable[BaseModel], path=None, stream=None):
    """One compact JSON object per line, UTF-8, LF endings, keys in schema order."""
    lines = [record.model_dump_json() + "\n" for record in records]
    if path is None:
        stream.write("".join(lines))
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.writelines(lines)
    except OSError as e:
        raise DatasetFormatError(f"cannot write file: {e.strerror}", path=path) from e


def write_annotations(records: Sequence[AnnotatedRecord], path=None, stream=None):
    write_jsonl(records, path=path, stream=stream)


def read_annotations(path) -> List[AnnotatedRecord]:
    records = []
    for position, obj in _json_objects(path, DatasetFormat.GENERIC_JSONL):
        try:
            records.append(AnnotatedRecord.model_validate(obj))
        except ValidationError as e:
            raise DatasetFormatError(f"invalid record: {e.errors()[0]['msg']}", path=path, position=position) from e
    return records


def read_labels(path) -> Dict[str, List[Label]]:
    """id -> labels for any JSONL file with "id" and "labels" (gold, annotated or training records)."""
    labels = {}
    for position, obj in _json_objects(path, DatasetFormat.GENERIC_JSONL):
        if "id" not in obj or "labels" not in obj:
            raise DatasetFormatError("missing field id or labels", path=path, position=position)
        try:
            labels[str(obj["id"])] = [Label(label) for label in obj["labels"]]
        except ValueError as e:
            raise DatasetFormatError(str(e), path=path, position=position) from e
    return labels


def _token_key(tokens: Sequence[str]) -> Tuple[str, ...]:
    return tuple(token.casefold() for token in tokens)


def merge_training_set(human: Sequence[GoldExample], synthetic: Sequence[AnnotatedRecord],
                       holdout: Sequence[GoldExample] = ()) -> List[TrainingRecord]:
    """Human examples first, then synthetic records whose question is neither held out nor human-labelled."""
    excluded = {_token_key(example.tokens) for example in holdout}
    merged = []
    for example in human:
        if _token_key(example.tokens) in excluded:
            logger.warning(f"Human example {example.id} also appears in the holdout set; dropping it")
            continue
        merged.append(TrainingRecord(id=example.id, tokens=list(example.tokens), labels=list(example.labels),
                                     tag_ids=tag_id_string(example.labels), source="human"))
    excluded |= {_token_key(example.tokens) for example in human}

    dropped = 0
    for record in synthetic:
        if _token_key(record.tokens) in excluded:
            dropped += 1
            continue
        merged.append(TrainingRecord(id=record.id, tokens=record.tokens, labels=record.labels,
                                     tag_ids=record.tag_ids, source="synthetic"))
    logger.info(f"Merged {len(merged)} training records; dropped {dropped} synthetic duplicates of held-out or human questions")
    return merged


def label_stats(label_sets: Dict[str, Iterable[Sequence[Label]]]) -> pd.DataFrame:
    """
    Token counts and percentages per label, one (Tokens, %) column pair per named split.
    """
    columns = {}
    for name, sequences in label_sets.items():
        counts = pd.Series([Label(label) for labels in sequences for label in labels], dtype=object).value_counts()
        tokens = pd.Series({_LABEL_NAMES[label]: int(counts.get(label, 0)) for label in _LABEL_NAMES})
        total = tokens.sum()
        share = (tokens / total * 100).round(1) if total else tokens.astype(float)
        columns[(name, "Tokens")] = tokens
        columns[(name, "%")] = share
    frame = pd.DataFrame(columns)
    frame.index.name = "Entity"
    return frame


def compare_to_reference(frame: pd.DataFrame, split: Optional[str] = None) -> pd.DataFrame:
    """Per-label deviation of one split's shares from the published synthetic-train distribution."""
    split = split or frame.columns.get_level_values(0)[0]
    observed = frame[(split, "%")]
    reference = pd.Series(REFERENCE_SHARES)
    result = pd.DataFrame({"observed": observed, "reference": reference})
    result["delta"] = (result["observed"] - result["reference"]).round(1)
    result["within_tolerance"] = result["delta"].abs() <= REFERENCE_TOLERANCE
    return result
