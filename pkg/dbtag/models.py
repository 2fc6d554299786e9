"""
Domain models for database entity annotation.

Every model is an immutable pydantic object so it can be shared freely
between worker processes.
"""

from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import ConsistencyError, LabelAlignmentError, SpanBoundsError


class EntityType(str, Enum):
    TABLE = "T"
    COLUMN = "C"
    VALUE = "V"

    @property
    def label(self) -> "Label":
        return Label(self.value)


class Label(str, Enum):
    """Per-token label: an entity type, or NONE ("O") for tokens outside any entity."""

    TABLE = "T"
    COLUMN = "C"
    VALUE = "V"
    NONE = "O"

    @property
    def tag_id(self) -> int:
        return _TAG_IDS[self]

    @property
    def entity_type(self) -> Optional[EntityType]:
        return None if self is Label.NONE else EntityType(self.value)


_TAG_IDS = {Label.NONE: 0, Label.TABLE: 1, Label.COLUMN: 2, Label.VALUE: 3}


def tag_id_string(labels: Sequence[Label]) -> str:
    """Render labels as the whitespace separated <id_k> sequence used as seq2seq targets."""
    return " ".join(f"<id_{Label(label).tag_id}>" for label in labels)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class Token(_Frozen):
    text: str = Field(..., min_length=1)
    char_start: int = Field(..., ge=0)
    char_end: int

    @model_validator(mode="after")
    def _check_offsets(self):
        if self.char_end <= self.char_start:
            raise ValueError("char_end must be greater than char_start")
        if self.char_end - self.char_start != len(self.text):
            raise ValueError("token text length does not match its character range")
        return self


class NlqDoc(_Frozen):
    """A tokenized natural-language question."""

    raw: str
    tokens: Tuple[Token, ...] = ()

    @model_validator(mode="after")
    def _check_cover(self):
        position = 0
        for token in self.tokens:
            if token.char_start < position:
                raise ConsistencyError(f"token {token.text!r} overlaps or precedes its predecessor")
            if self.raw[token.char_start:token.char_end] != token.text:
                raise ConsistencyError(f"token {token.text!r} does not match the raw text at {token.char_start}")
            if self.raw[position:token.char_start].strip():
                raise ConsistencyError(f"non-whitespace text before offset {token.char_start} is not tokenized")
            position = token.char_end
        if self.raw[position:].strip():
            raise ConsistencyError(f"non-whitespace text after offset {position} is not tokenized")
        return self

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def texts(self) -> List[str]:
        return [token.text for token in self.tokens]


class Span(_Frozen):
    """Half-open token range [start, end)."""

    start: int = Field(..., ge=0)
    end: int

    @model_validator(mode="after")
    def _check_order(self):
        if self.end <= self.start:
            raise ValueError("span end must be greater than start")
        return self

    @property
    def width(self) -> int:
        return self.end - self.start

    @property
    def bitmask(self) -> int:
        return ((1 << self.end) - 1) ^ ((1 << self.start) - 1)

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def sort_key(self) -> Tuple[int, int]:
        return (self.start, self.end)


def span_text(doc: NlqDoc, span: Span) -> str:
    if span.end > len(doc.tokens):
        raise SpanBoundsError(f"span ({span.start}, {span.end}) exceeds {len(doc.tokens)} tokens")
    return " ".join(token.text for token in doc.tokens[span.start:span.end])


class DbEntity(_Frozen):
    text: str = Field(..., min_length=1)
    entity_type: EntityType
    norm_text: str = ""

    @model_validator(mode="before")
    @classmethod
    def _fill_norm_text(cls, data):
        if isinstance(data, dict) and not data.get("norm_text") and isinstance(data.get("text"), str):
            data = {**data, "norm_text": data["text"].casefold()}
        return data

    @model_validator(mode="after")
    def _check_norm_text(self):
        if self.norm_text != self.text.casefold():
            raise ConsistencyError(f"norm_text {self.norm_text!r} is not the case-folding of {self.text!r}")
        return self

    @property
    def key(self) -> Tuple[str, EntityType]:
        return (self.norm_text, self.entity_type)

    def __str__(self):
        return f"{self.text}:{self.entity_type.value}"


class EntitySet(_Frozen):
    """Entities of one SQL query, unique by (norm_text, entity_type), in first-occurrence order."""

    entities: Tuple[DbEntity, ...] = ()

    @model_validator(mode="after")
    def _check_unique(self):
        keys = [entity.key for entity in self.entities]
        if len(set(keys)) != len(keys):
            raise ConsistencyError("entity set contains duplicate (norm_text, type) pairs")
        return self

    @classmethod
    def from_entities(cls, entities: Iterable[DbEntity]) -> "EntitySet":
        seen = set()
        unique = []
        for entity in entities:
            if entity.key not in seen:
                seen.add(entity.key)
                unique.append(entity)
        return cls(entities=tuple(unique))

    def __len__(self) -> int:
        return len(self.entities)

    def __getitem__(self, index: int) -> DbEntity:
        return self.entities[index]


class EntityLink(_Frozen):
    span: Span
    entity_index: int = Field(..., ge=0)
    score: float = Field(..., ge=0.0, le=1.0)


def labels_from_links(doc: NlqDoc, links: Sequence[EntityLink], entities: EntitySet) -> List[Label]:
    """Project span links onto a per-token label sequence."""
    labels = [Label.NONE] * len(doc.tokens)
    covered = [False] * len(doc.tokens)
    for link in links:
        if link.entity_index >= len(entities):
            raise ConsistencyError(f"link refers to entity {link.entity_index} of {len(entities)}")
        if link.span.end > len(doc.tokens):
            raise SpanBoundsError(f"link span ({link.span.start}, {link.span.end}) exceeds {len(doc.tokens)} tokens")
        label = entities[link.entity_index].entity_type.label
        for i in range(link.span.start, link.span.end):
            if covered[i]:
                raise ConsistencyError(f"two links cover token {i}")
            covered[i] = True
            labels[i] = label
    return labels


def covered_runs(labels: Sequence[Label]) -> List[Tuple[Span, EntityType]]:
    """Maximal runs of identical entity labels."""
    runs = []
    start = None
    for i, label in enumerate(list(labels) + [Label.NONE]):
        label = Label(label)
        if start is not None and label is not Label(labels[start]):
            runs.append((Span(start=start, end=i), Label(labels[start]).entity_type))
            start = None
        if start is None and label is not Label.NONE:
            start = i
    return runs


class Annotation(_Frozen):
    record_id: str
    doc: NlqDoc
    entities: EntitySet
    links: Tuple[EntityLink, ...] = ()
    labels: Tuple[Label, ...] = ()
    threshold: Optional[float] = None

    @model_validator(mode="after")
    def _check_consistency(self):
        indices = [link.entity_index for link in self.links]
        if len(set(indices)) != len(indices):
            raise ConsistencyError(f"record {self.record_id}: an entity is linked more than once")
        if self.threshold is not None:
            for link in self.links:
                if link.score < self.threshold:
                    raise ConsistencyError(
                        f"record {self.record_id}: link score {link.score} below threshold {self.threshold}"
                    )
        expected = labels_from_links(self.doc, self.links, self.entities)
        if list(self.labels) != expected:
            raise ConsistencyError(f"record {self.record_id}: labels disagree with links")
        return self

    @classmethod
    def build(cls, record_id: str, doc: NlqDoc, entities: EntitySet, links: Iterable[EntityLink],
              threshold: Optional[float] = None) -> "Annotation":
        ordered = tuple(sorted(links, key=lambda link: link.span.sort_key()))
        labels = labels_from_links(doc, ordered, entities)
        return cls(record_id=record_id, doc=doc, entities=entities, links=ordered,
                   labels=tuple(labels), threshold=threshold)

    def linked_entity(self, link: EntityLink) -> DbEntity:
        return self.entities[link.entity_index]


class RawPair(_Frozen):
    id: str
    question: str = Field(..., min_length=1)
    sql: str = Field(..., min_length=1)


class GoldExample(_Frozen):
    """A human-annotated question: tokens with gold labels, optionally with its SQL."""

    id: str
    tokens: Tuple[str, ...]
    labels: Tuple[Label, ...]
    sql: Optional[str] = None
    question: Optional[str] = None

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.tokens) != len(self.labels):
            raise LabelAlignmentError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels", record_id=self.id
            )
        return self

    def as_pair(self) -> RawPair:
        question = self.question if self.question else " ".join(self.tokens)
        return RawPair(id=self.id, question=question, sql=self.sql or "")
