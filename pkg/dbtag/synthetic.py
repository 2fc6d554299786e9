"""
Synthetic question/SQL corpus generator.

Draws table, column and value mentions from a small built-in schema and
fills question templates with a seeded numpy generator, so the same
(n, seed) always yields the same pairs.
"""

import logging
from typing import List

import numpy as np

from models import RawPair

logger = logging.getLogger(__name__)

# table -> (singular noun used in questions, {column: question phrase}, {column: sample values})
SCHEMA = {
    "movies": ("movie", {"title": "titles", "year": "release year", "pop": "popularity", "genre": "genre"},
               {"year": ["1945", "1972", "1999", "2010"], "genre": ["drama", "comedy", "western"]}),
    "singers": ("singer", {"name": "names", "country": "country", "age": "age", "song_name": "song names"},
                {"country": ["France", "Netherlands", "United States"], "age": ["25", "32", "41"]}),
    "employees": ("employee", {"first_name": "first names", "salary": "salaries", "department": "department",
                               "hire_date": "hire dates"},
                  {"department": ["sales", "research", "marketing"], "salary": ["50000", "72000"]}),
    "airports": ("airport", {"airport_name": "airport names", "city": "city", "elevation": "elevation"},
                 {"city": ["Boston", "Denver", "Anchorage"], "elevation": ["100", "5431"]}),
    "students": ("student", {"last_name": "last names", "grade": "grade", "major": "major", "gpa": "gpa"},
                 {"grade": ["9", "10", "12"], "major": ["physics", "history"]}),
}

# (question template, SQL template) pairs sharing the same placeholders
TEMPLATES = (
    ("Name {noun} {phrase} with {filter_phrase} {value}",
     "SELECT {col} FROM {table} WHERE {filter_col} = '{value}'"),
    ("How many {noun}s have {filter_phrase} {value}?",
     "SELECT count(*) FROM {table} WHERE {filter_col} = '{value}'"),
    ("List the {phrase} of all {noun}s, ordered by {filter_phrase}",
     "SELECT {col} FROM {table} ORDER BY {filter_col}"),
    ("Show {phrase} for each {noun} whose {filter_phrase} contains {value}",
     "SELECT {col} FROM {table} WHERE {filter_col} LIKE '%{value}%'"),
    ("What is the average {filter_phrase} of {noun}s?",
     "SELECT avg({filter_col}) FROM {table}"),
    ("Find distinct {phrase} of {noun}s grouped by {filter_phrase}",
     "SELECT DISTINCT {col} FROM {table} GROUP BY {filter_col}"),
    ("Show the top {limit} {noun}s by {filter_phrase}",
     "SELECT {col} FROM {table} ORDER BY {filter_col} DESC LIMIT {limit}"),
)


def synthetic_corpus(n: int, seed: int = 42, invalid_rate: float = 0.0) -> List[RawPair]:
    """
    Generate `n` deterministic question/SQL pairs with ids "syn-00000", ...

    With `invalid_rate` > 0 roughly that fraction of SQL strings gets an
    unterminated string literal, so the skip path of batch annotation is exercised.
    """
    rng = np.random.default_rng(seed)
    tables = sorted(SCHEMA)
    pairs = []
    for i in range(n):
        table = tables[rng.integers(len(tables))]
        noun, phrases, values = SCHEMA[table]
        columns = sorted(phrases)
        col = columns[rng.integers(len(columns))]
        filter_col = sorted(values)[rng.integers(len(values))]
        pool = values[filter_col]
        value = pool[rng.integers(len(pool))]
        question_template, sql_template = TEMPLATES[rng.integers(len(TEMPLATES))]
        fields = dict(noun=noun, table=table, col=col, phrase=phrases[col], filter_col=filter_col,
                      filter_phrase=phrases[filter_col], value=value,
                      limit=int(rng.integers(3, 11)))
        sql = sql_template.format(**fields)
        if invalid_rate and rng.random() < invalid_rate:
            sql += " AND note = 'unterminated"
        pairs.append(RawPair(id=f"syn-{i:05d}", question=question_template.format(**fields), sql=sql))
    logger.info(f"Generated {len(pairs)} synthetic pairs (seed {seed})")
    return pairs
