"""
Token-level precision / recall / F1 under the 4-, 3- and 2-class label groupings.

Counts are pooled over all tokens of a corpus before any ratio is taken
(corpus-level micro averaging). The O class is reported per class but is
left out of the micro and macro aggregates.
"""

import logging
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from errors import LabelAlignmentError
from models import Label
from schemas import ClassScores, MetricsReport

logger = logging.getLogger(__name__)


class ClassGrouping(str, Enum):
    FOUR_CLASS = "4"
    THREE_CLASS = "3"
    TWO_CLASS = "2"

    @property
    def classes(self) -> Tuple[str, ...]:
        return _CLASSES[self]

    @property
    def entity_classes(self) -> Tuple[str, ...]:
        return tuple(name for name in self.classes if name != "O")

    @property
    def title(self) -> str:
        return f"{self.value}-class"

    def project(self, label: Label) -> str:
        return _PROJECTIONS[self][Label(label)]


_PROJECTIONS: Dict[ClassGrouping, Dict[Label, str]] = {
    ClassGrouping.FOUR_CLASS: {Label.TABLE: "T", Label.COLUMN: "C", Label.VALUE: "V", Label.NONE: "O"},
    ClassGrouping.THREE_CLASS: {Label.TABLE: "S", Label.COLUMN: "S", Label.VALUE: "V", Label.NONE: "O"},
    ClassGrouping.TWO_CLASS: {Label.TABLE: "I", Label.COLUMN: "I", Label.VALUE: "I", Label.NONE: "O"},
}
_CLASSES: Dict[ClassGrouping, Tuple[str, ...]] = {
    ClassGrouping.FOUR_CLASS: ("T", "C", "V", "O"),
    ClassGrouping.THREE_CLASS: ("S", "V", "O"),
    ClassGrouping.TWO_CLASS: ("I", "O"),
}


def _pool(pairs: Iterable[Tuple[Sequence[Label], Sequence[Label]]], grouping: ClassGrouping,
          ids: Optional[Sequence[str]] = None) -> Tuple[np.ndarray, np.ndarray]:
    gold_all: List[str] = []
    pred_all: List[str] = []
    for i, (gold, pred) in enumerate(pairs):
        if len(gold) != len(pred):
            record_id = ids[i] if ids is not None else str(i)
            raise LabelAlignmentError(f"{len(gold)} gold labels but {len(pred)} predicted", record_id=record_id)
        gold_all.extend(grouping.project(label) for label in gold)
        pred_all.extend(grouping.project(label) for label in pred)
    return np.array(gold_all, dtype=object), np.array(pred_all, dtype=object)


def confusion(gold: Sequence[Label], pred: Sequence[Label], grouping: ClassGrouping) -> np.ndarray:
    """Confusion matrix (rows gold, columns predicted) in `grouping.classes` order."""
    return corpus_confusion([(gold, pred)], grouping)


def corpus_confusion(pairs: Iterable[Tuple[Sequence[Label], Sequence[Label]]],
                     grouping: ClassGrouping) -> np.ndarray:
    gold, pred = _pool(pairs, grouping)
    size = len(grouping.classes)
    if gold.size == 0:
        return np.zeros((size, size), dtype=int)
    return confusion_matrix(gold, pred, labels=list(grouping.classes))


def _aggregate(gold: np.ndarray, pred: np.ndarray, labels: Sequence[str], average: str) -> ClassScores:
    precision, recall, f1, _ = precision_recall_fscore_support(
        gold, pred, labels=list(labels), average=average, zero_division=0
    )
    return ClassScores(precision=float(precision), recall=float(recall), f1=float(f1))


def _report(gold: np.ndarray, pred: np.ndarray, grouping: ClassGrouping) -> MetricsReport:
    classes = grouping.classes
    if gold.size == 0:
        return MetricsReport(
            grouping=grouping.title,
            classes={name: ClassScores() for name in classes},
            micro=ClassScores(),
            macro=ClassScores(),
        )

    matrix = confusion_matrix(gold, pred, labels=list(classes))
    tp = np.diag(matrix)
    fp = matrix.sum(axis=0) - tp
    fn = matrix.sum(axis=1) - tp
    precision, recall, f1, support = precision_recall_fscore_support(
        gold, pred, labels=list(classes), average=None, zero_division=0
    )
    per_class = {
        name: ClassScores(
            precision=float(precision[k]), recall=float(recall[k]), f1=float(f1[k]),
            support=int(support[k]), tp=int(tp[k]), fp=int(fp[k]), fn=int(fn[k]),
        )
        for k, name in enumerate(classes)
    }

    entity_idx = [classes.index(name) for name in grouping.entity_classes]
    micro = _aggregate(gold, pred, grouping.entity_classes, "micro")
    micro = micro.model_copy(update={
        "support": int(support[entity_idx].sum()),
        "tp": int(tp[entity_idx].sum()),
        "fp": int(fp[entity_idx].sum()),
        "fn": int(fn[entity_idx].sum()),
    })
    macro = _aggregate(gold, pred, grouping.entity_classes, "macro")
    return MetricsReport(grouping=grouping.title, classes=per_class, micro=micro, macro=macro,
                         n_tokens=int(gold.size))


def score(gold: Sequence[Label], pred: Sequence[Label], grouping: ClassGrouping) -> MetricsReport:
    gold_arr, pred_arr = _pool([(gold, pred)], grouping)
    return _report(gold_arr, pred_arr, grouping)


def score_corpus(pairs: Iterable[Tuple[Sequence[Label], Sequence[Label]]], grouping: ClassGrouping,
                 ids: Optional[Sequence[str]] = None) -> MetricsReport:
    gold, pred = _pool(pairs, grouping, ids)
    report = _report(gold, pred, grouping)
    logger.debug(f"{grouping.title} over {report.n_tokens} tokens: micro F1 {report.micro.f1:.4f}")
    return report


def calibration_objective(pairs: Iterable[Tuple[Sequence[Label], Sequence[Label]]],
                          ids: Optional[Sequence[str]] = None) -> MetricsReport:
    """Type-sensitive 4-class report whose micro F1 over T/C/V is the calibration objective."""
    return score_corpus(pairs, ClassGrouping.FOUR_CLASS, ids)
