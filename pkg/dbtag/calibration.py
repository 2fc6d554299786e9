"""
Grid-search calibration of the synthetic annotator against human gold labels,
and corpus augmentation with the selected configuration.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from aligner import annotate_doc, candidate_spans
from annotation_service import AnnotationService
from config import JOBS, MAX_SPAN_TOKENS
from errors import CalibrationError, SqlParseError
from metrics import calibration_objective
from models import EntitySet, GoldExample, Label, NlqDoc, RawPair
from schemas import AnnotatedRecord, BestConfig, CalibrationReport, GridCell, SkipEntry
from similarity import THRESHOLD_GRID, SimilarityConfig, SimilarityMeasure
from sql_entities import extract_entities, parse_sql
from tokenizer import tokenize

logger = logging.getLogger(__name__)

_MEASURE_RANK = {SimilarityMeasure.JACCARD3: 0, SimilarityMeasure.LEVENSHTEIN: 1}

CellKey = Tuple[SimilarityMeasure, float]


def _prepare(example: GoldExample) -> Tuple[Optional[Tuple[NlqDoc, EntitySet]], Optional[str]]:
    """Tokenize and extract entities for one gold example, or return the reason it cannot be used."""
    doc = tokenize(example.question if example.question else " ".join(example.tokens))
    if doc.texts != list(example.tokens):
        return None, "gold tokens differ from the tokenized question"
    try:
        entities = extract_entities(parse_sql(example.sql))
    except SqlParseError as e:
        return None, str(e.with_record(example.id))
    return (doc, entities), None


def _predict_grid(record_id: str, doc: NlqDoc, entities: EntitySet,
                  max_span_tokens: int) -> Dict[CellKey, Tuple[Tuple[Label, ...], int]]:
    """Labels and link count for every grid cell; each measure is scored once at the lowest threshold."""
    predictions = {}
    for measure in SimilarityMeasure:
        base = candidate_spans(doc, entities, SimilarityConfig(measure=measure, threshold=THRESHOLD_GRID[0]),
                               max_span_tokens)
        for threshold in THRESHOLD_GRID:
            config = SimilarityConfig(measure=measure, threshold=threshold)
            annotation = annotate_doc(record_id, doc, entities, config, max_span_tokens,
                                      matrix=base.restrict(threshold))
            predictions[(measure, threshold)] = (annotation.labels, len(annotation.links))
    return predictions


def _best_cell(cells: Sequence[GridCell]) -> GridCell:
    # highest F1, then the higher threshold, then jaccard3 before levenshtein
    return min(cells, key=lambda cell: (-cell.f1, -cell.threshold, _MEASURE_RANK[cell.measure]))


def calibrate(gold: Sequence[GoldExample], max_span_tokens: int = MAX_SPAN_TOKENS,
              n_jobs: Optional[int] = None) -> CalibrationReport:
    missing_sql = [example.id for example in gold if not example.sql]
    if missing_sql:
        raise CalibrationError(f"gold examples without SQL cannot be calibrated: {', '.join(missing_sql[:5])}")

    usable: List[Tuple[GoldExample, NlqDoc, EntitySet]] = []
    skipped_ids: List[str] = []
    for example in gold:
        prepared, reason = _prepare(example)
        if prepared is None:
            logger.warning(f"Excluding gold example {example.id} from calibration: {reason}")
            skipped_ids.append(example.id)
            continue
        usable.append((example, *prepared))
    if not usable:
        raise CalibrationError(f"no usable gold examples ({len(skipped_ids)} skipped)")

    predictions = Parallel(n_jobs=JOBS if n_jobs is None else n_jobs)(
        delayed(_predict_grid)(example.id, doc, entities, max_span_tokens)
        for example, doc, entities in usable
    )

    ids = [example.id for example, _, _ in usable]
    cells = []
    for measure in SimilarityMeasure:
        for threshold in THRESHOLD_GRID:
            key = (measure, threshold)
            pairs = [(example.labels, predicted[key][0]) for (example, _, _), predicted in zip(usable, predictions)]
            report = calibration_objective(pairs, ids)
            cell = GridCell(
                measure=measure,
                threshold=threshold,
                f1=report.micro.f1,
                precision=report.micro.precision,
                recall=report.micro.recall,
                n_links=sum(predicted[key][1] for predicted in predictions),
                report=report,
            )
            logger.info(f"{measure.value}@{threshold:g}: F1 {cell.f1:.4f} ({cell.n_links} links)")
            cells.append(cell)

    best = _best_cell(cells)
    logger.info(f"Best configuration {best.measure.value}@{best.threshold:g} with F1 {best.f1:.4f}")
    return CalibrationReport(
        grid=cells,
        best=BestConfig(measure=best.measure, threshold=best.threshold),
        best_f1=best.f1,
        skipped=len(skipped_ids),
        skipped_ids=skipped_ids,
    )


def augment(raw: Sequence[RawPair], config: SimilarityConfig, max_span_tokens: int = MAX_SPAN_TOKENS,
            n_jobs: Optional[int] = None) -> Tuple[List[AnnotatedRecord], List[SkipEntry]]:
    """Annotate a raw text-to-SQL corpus with the calibrated configuration."""
    return AnnotationService(config, max_span_tokens, n_jobs).run(raw)
