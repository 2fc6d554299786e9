"""
Candidate span generation and exact span/entity assignment.

The assignment maximizes the total similarity of chosen (entity, span)
pairs, with at most one span per entity and pairwise disjoint spans.
`solve` is an exhaustive search over entities with memoization on the set
of occupied tokens still relevant to the remaining entities, so its result
always equals the brute-force optimum.
"""

import logging
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import MAX_SPAN_TOKENS
from errors import ConsistencyError, SqlParseError
from models import Annotation, EntityLink, EntitySet, NlqDoc, RawPair, Span, span_text
from similarity import SimilarityConfig, similarity_function
from sql_entities import extract_entities, parse_sql
from tokenizer import tokenize

logger = logging.getLogger(__name__)

# Objective values closer than this are treated as ties.
TIE_TOLERANCE = 1e-9


class ScoredCandidate(BaseModel):
    model_config = ConfigDict(frozen=True)

    entity_index: int = Field(..., ge=0)
    span: Span
    score: float = Field(..., ge=0.0, le=1.0)


class ScoreMatrix(BaseModel):
    """Sparse (entity, span) -> score table holding exactly the candidates that meet the threshold."""

    model_config = ConfigDict(frozen=True)

    config: SimilarityConfig
    candidates: Tuple[ScoredCandidate, ...] = ()

    @model_validator(mode="after")
    def _check_candidates(self):
        seen = set()
        for candidate in self.candidates:
            if candidate.score < self.config.threshold:
                raise ConsistencyError(
                    f"candidate score {candidate.score} below threshold {self.config.threshold}"
                )
            key = (candidate.entity_index, candidate.span.sort_key())
            if key in seen:
                raise ConsistencyError(f"duplicate candidate {key}")
            seen.add(key)
        return self

    @property
    def scores(self) -> Dict[Tuple[int, Tuple[int, int]], float]:
        return {(c.entity_index, c.span.sort_key()): c.score for c in self.candidates}

    def restrict(self, threshold: float) -> "ScoreMatrix":
        """The matrix the same measure would produce at a higher threshold."""
        if threshold < self.config.threshold:
            raise ValueError("cannot lower the threshold of an existing matrix")
        kept = tuple(c for c in self.candidates if c.score >= threshold)
        return ScoreMatrix(
            config=SimilarityConfig(measure=self.config.measure, threshold=threshold),
            candidates=kept,
        )

    def __len__(self) -> int:
        return len(self.candidates)


class Alignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    chosen: Dict[int, Span] = Field(default_factory=dict)
    scores: Dict[int, float] = Field(default_factory=dict)
    objective: float = 0.0

    @model_validator(mode="after")
    def _check_feasible(self):
        if set(self.chosen) != set(self.scores):
            raise ConsistencyError("alignment scores do not match chosen entities")
        spans = sorted(self.chosen.values(), key=Span.sort_key)
        for left, right in zip(spans, spans[1:]):
            if left.overlaps(right):
                raise ConsistencyError(f"chosen spans {left.sort_key()} and {right.sort_key()} overlap")
        if abs(sum(self.scores.values()) - self.objective) > TIE_TOLERANCE:
            raise ConsistencyError("alignment objective is not the sum of its scores")
        return self

    def links(self) -> List[EntityLink]:
        return [
            EntityLink(span=span, entity_index=index, score=self.scores[index])
            for index, span in self.chosen.items()
        ]


def candidate_spans(doc: NlqDoc, entities: EntitySet, config: SimilarityConfig,
                    max_span_tokens: int = MAX_SPAN_TOKENS) -> ScoreMatrix:
    if max_span_tokens < 1:
        raise ValueError("max_span_tokens must be at least 1")
    sim = similarity_function(config.measure)
    n = len(doc.tokens)
    spans = [
        Span(start=start, end=end)
        for start in range(n)
        for end in range(start + 1, min(n, start + max_span_tokens) + 1)
    ]
    texts = [span_text(doc, span).casefold() for span in spans]

    candidates = []
    for index, entity in enumerate(entities.entities):
        for span, text in zip(spans, texts):
            score = sim(text, entity.norm_text)
            if score >= config.threshold:
                candidates.append(ScoredCandidate(entity_index=index, span=span, score=score))
    candidates.sort(key=lambda c: (c.entity_index, c.span.start, c.span.end))
    return ScoreMatrix(config=config, candidates=tuple(candidates))


def solve(matrix: ScoreMatrix, n_tokens: int) -> Alignment:
    """
    Exact maximum-weight assignment of at most one span per entity with disjoint spans.

    Among optimal solutions the canonical one is returned: entities are
    decided in index order, each preferring an assigned span over none,
    then the smaller start, then the smaller end.
    """
    by_entity: Dict[int, List[Tuple[Span, float, int]]] = {}
    for candidate in matrix.candidates:
        if candidate.span.end > n_tokens:
            raise ConsistencyError(
                f"candidate span ({candidate.span.start}, {candidate.span.end}) exceeds {n_tokens} tokens"
            )
        by_entity.setdefault(candidate.entity_index, []).append(
            (candidate.span, candidate.score, candidate.span.bitmask)
        )
    entity_order = sorted(by_entity)
    options = [sorted(by_entity[index], key=lambda option: option[0].sort_key()) for index in entity_order]

    # tokens that entities from position i onwards could still occupy
    relevant = [0] * (len(options) + 1)
    for pos in range(len(options) - 1, -1, -1):
        mask = relevant[pos + 1]
        for _, _, bits in options[pos]:
            mask |= bits
        relevant[pos] = mask

    @lru_cache(maxsize=None)
    def best(pos: int, occupied: int) -> float:
        if pos == len(options):
            return 0.0
        value = best(pos + 1, occupied & relevant[pos + 1])
        for _, score, bits in options[pos]:
            if bits & occupied:
                continue
            value = max(value, score + best(pos + 1, (occupied | bits) & relevant[pos + 1]))
        return value

    chosen: Dict[int, Span] = {}
    scores: Dict[int, float] = {}
    occupied = 0
    for pos, entity_index in enumerate(entity_order):
        target = best(pos, occupied & relevant[pos])
        for span, score, bits in options[pos]:
            if bits & occupied:
                continue
            if score + best(pos + 1, (occupied | bits) & relevant[pos + 1]) >= target - TIE_TOLERANCE:
                chosen[entity_index] = span
                scores[entity_index] = score
                occupied |= bits
                break

    alignment = Alignment(chosen=chosen, scores=scores, objective=sum(scores.values()))
    logger.debug(
        f"solved {len(matrix)} candidates over {len(entity_order)} entities: "
        f"{len(chosen)} links, objective {alignment.objective:.4f}, {best.cache_info().currsize} states"
    )
    return alignment


def annotate_doc(record_id: str, doc: NlqDoc, entities: EntitySet, config: SimilarityConfig,
                 max_span_tokens: int = MAX_SPAN_TOKENS,
                 matrix: Optional[ScoreMatrix] = None) -> Annotation:
    if matrix is None:
        matrix = candidate_spans(doc, entities, config, max_span_tokens)
    alignment = solve(matrix, len(doc.tokens))
    return Annotation.build(record_id, doc, entities, alignment.links(), threshold=config.threshold)


def annotate(pair: RawPair, config: SimilarityConfig,
             max_span_tokens: int = MAX_SPAN_TOKENS) -> Annotation:
    """Synthetic annotation of one question from its paired SQL."""
    doc = tokenize(pair.question)
    try:
        entities = extract_entities(parse_sql(pair.sql))
    except SqlParseError as e:
        raise e.with_record(pair.id) from e
    return annotate_doc(pair.id, doc, entities, config, max_span_tokens)
