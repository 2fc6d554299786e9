import json

import pytest

from models import GoldExample, Label, RawPair
from similarity import SimilarityConfig, SimilarityMeasure

MOVIE_QUESTION = "Name movie titles released in 1945, and order by popularity"
MOVIE_SQL = "SELECT title FROM movies WHERE year = 1945 ORDER BY pop"
MOVIE_LABELS = ["O", "T", "C", "O", "O", "V", "O", "O", "O", "O", "C"]


@pytest.fixture
def movie_pair():
    """The movie/popularity question used throughout the docs"""
    return RawPair(id="movie", question=MOVIE_QUESTION, sql=MOVIE_SQL)


@pytest.fixture
def movie_gold():
    """Human annotation of the movie/popularity question"""
    return GoldExample(
        id="movie",
        tokens=("Name", "movie", "titles", "released", "in", "1945", ",", "and", "order", "by", "popularity"),
        labels=tuple(Label(label) for label in MOVIE_LABELS),
        sql=MOVIE_SQL,
        question=MOVIE_QUESTION,
    )


@pytest.fixture
def jaccard_low():
    return SimilarityConfig(measure=SimilarityMeasure.JACCARD3, threshold=0.1)


@pytest.fixture
def write_jsonl_file(tmp_path):
    """Write a list of dicts as JSONL and return the path"""
    def _write(name, rows):
        path = tmp_path / name
        path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")
        return path
    return _write
