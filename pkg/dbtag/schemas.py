"""
Pydantic schemas for everything dbtag reads from or writes to disk.

Field declaration order is the JSON key order of the output files.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_serializer, model_validator

from errors import ConsistencyError
from models import Annotation, Label, span_text, tag_id_string
from similarity import SimilarityConfig, SimilarityMeasure


class EntityMention(BaseModel):
    start: int
    end: int
    text: str
    type: str
    entity: str
    score: float


class AnnotatedRecord(BaseModel):
    id: str
    tokens: List[str]
    labels: List[Label]
    entities: List[EntityMention] = Field(default_factory=list)
    tag_ids: str

    @model_validator(mode="after")
    def _check_record(self):
        if len(self.tokens) != len(self.labels):
            raise ConsistencyError(f"record {self.id}: {len(self.tokens)} tokens but {len(self.labels)} labels")
        if len(self.tag_ids.split()) != len(self.tokens):
            raise ConsistencyError(f"record {self.id}: tag_ids length does not match tokens")
        spans = sorted((mention.start, mention.end) for mention in self.entities)
        for (_, left_end), (right_start, _) in zip(spans, spans[1:]):
            if right_start < left_end:
                raise ConsistencyError(f"record {self.id}: entity spans overlap")
        return self

    @classmethod
    def from_annotation(cls, annotation: Annotation) -> "AnnotatedRecord":
        mentions = [
            EntityMention(
                start=link.span.start,
                end=link.span.end,
                text=span_text(annotation.doc, link.span),
                type=annotation.linked_entity(link).entity_type.value,
                entity=annotation.linked_entity(link).text,
                score=round(link.score, 4),
            )
            for link in annotation.links
        ]
        return cls(
            id=annotation.record_id,
            tokens=annotation.doc.texts,
            labels=list(annotation.labels),
            entities=mentions,
            tag_ids=tag_id_string(annotation.labels),
        )


class TokenizedRecord(BaseModel):
    id: str
    tokens: List[str]


class ExtractedEntity(BaseModel):
    text: str
    type: str


class ExtractedRecord(BaseModel):
    id: str
    entities: List[ExtractedEntity]


class TrainingRecord(BaseModel):
    id: str
    tokens: List[str]
    labels: List[Label]
    tag_ids: str
    source: str


class SkipEntry(BaseModel):
    id: str
    index: int
    reason: str


class ClassScores(BaseModel):
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    support: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @field_serializer("precision", "recall", "f1")
    def _round(self, value: float) -> float:
        return round(value, 4)


class MetricsReport(BaseModel):
    grouping: str
    classes: Dict[str, ClassScores]
    micro: ClassScores
    macro: ClassScores
    n_tokens: int = 0

    def to_json_dict(self) -> Dict[str, dict]:
        """{class: {precision, recall, f1, support}, "micro": ..., "macro": ...}"""
        keep = {"precision", "recall", "f1", "support"}
        payload = {name: scores.model_dump(include=keep) for name, scores in self.classes.items()}
        payload["micro"] = self.micro.model_dump(include=keep)
        payload["macro"] = self.macro.model_dump(include={"precision", "recall", "f1"})
        return payload


class GridCell(BaseModel):
    measure: SimilarityMeasure
    threshold: float
    f1: float
    precision: float
    recall: float
    n_links: int
    report: Optional[MetricsReport] = Field(default=None, exclude=True)

    @field_serializer("f1", "precision", "recall")
    def _round(self, value: float) -> float:
        return round(value, 4)

    @property
    def config(self) -> SimilarityConfig:
        return SimilarityConfig(measure=self.measure, threshold=self.threshold)


class BestConfig(BaseModel):
    measure: SimilarityMeasure
    threshold: float

    @property
    def config(self) -> SimilarityConfig:
        return SimilarityConfig(measure=self.measure, threshold=self.threshold)


class CalibrationReport(BaseModel):
    grid: List[GridCell]
    best: BestConfig
    best_f1: float = 0.0
    skipped: int = 0
    skipped_ids: List[str] = Field(default_factory=list)

    @field_serializer("best_f1")
    def _round(self, value: float) -> float:
        return round(value, 4)

    @model_validator(mode="after")
    def _check_best(self):
        if any(cell.f1 > self.best_f1 for cell in self.grid):
            raise ConsistencyError("best configuration is not the grid maximum")
        return self
