"""String similarity measures used to score span/entity pairs, and the calibration grid."""

from enum import Enum
from typing import Callable, FrozenSet, Iterator, Tuple

from pydantic import BaseModel, ConfigDict, Field
from rapidfuzz.distance import Levenshtein


class SimilarityMeasure(str, Enum):
    JACCARD3 = "jaccard3"
    LEVENSHTEIN = "levenshtein"


# 0.1, 0.2, ..., 1.0 as exact decimal-rounded floats
THRESHOLD_GRID: Tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(1, 11))


class SimilarityConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    measure: SimilarityMeasure
    threshold: float = Field(..., gt=0.0, le=1.0)

    def __str__(self):
        return f"{self.measure.value}@{self.threshold:g}"


def trigrams(text: str) -> FrozenSet[str]:
    """Contiguous 3-character substrings; strings shorter than 3 characters are their own single gram."""
    if len(text) < 3:
        return frozenset([text]) if text else frozenset()
    return frozenset(text[i:i + 3] for i in range(len(text) - 2))


def jaccard3(a: str, b: str) -> float:
    grams_a = trigrams(a.casefold())
    grams_b = trigrams(b.casefold())
    if not grams_a and not grams_b:
        return 1.0
    if not grams_a or not grams_b:
        return 0.0
    return len(grams_a & grams_b) / len(grams_a | grams_b)


def levenshtein_sim(a: str, b: str) -> float:
    """(longer length - edit distance) / longer length, on case-folded input.

    One division only, so a score equal to a grid threshold compares equal to it.
    """
    a, b = a.casefold(), b.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return (longest - Levenshtein.distance(a, b)) / longest


_MEASURES = {
    SimilarityMeasure.JACCARD3: jaccard3,
    SimilarityMeasure.LEVENSHTEIN: levenshtein_sim,
}


def similarity_function(measure: SimilarityMeasure) -> Callable[[str, str], float]:
    return _MEASURES[SimilarityMeasure(measure)]


def grid() -> Iterator[SimilarityConfig]:
    """The 2 x 10 calibration grid, measure-major."""
    for measure in SimilarityMeasure:
        for threshold in THRESHOLD_GRID:
            yield SimilarityConfig(measure=measure, threshold=threshold)
