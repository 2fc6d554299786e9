import random

import pytest

from aligner import ScoredCandidate, ScoreMatrix, annotate, annotate_doc, candidate_spans, solve
from errors import ConsistencyError, SqlParseError
from models import DbEntity, EntitySet, EntityType, Label, RawPair, Span
from similarity import THRESHOLD_GRID, SimilarityConfig, SimilarityMeasure
from tokenizer import tokenize

from .conftest import MOVIE_LABELS


def _matrix(candidates, threshold=0.1):
    config = SimilarityConfig(measure=SimilarityMeasure.JACCARD3, threshold=threshold)
    return ScoreMatrix(
        config=config,
        candidates=tuple(
            ScoredCandidate(entity_index=index, span=Span(start=start, end=end), score=score)
            for index, (start, end), score in candidates
        ),
    )


def _random_instance(rng):
    n_tokens = rng.randint(1, 12)
    all_spans = [(s, e) for s in range(n_tokens) for e in range(s + 1, n_tokens + 1)]
    candidates = []
    for index in range(rng.randint(1, 8)):
        for span in rng.sample(all_spans, min(rng.randint(1, 4), len(all_spans))):
            candidates.append((index, span, rng.uniform(0.1, 1.0)))
    return _matrix(candidates), n_tokens


def _brute_force(matrix):
    """Maximum objective over every assignment of at most one span per entity with disjoint spans."""
    options = {}
    for c in matrix.candidates:
        options.setdefault(c.entity_index, []).append((c.span.bitmask, c.score))
    entities = sorted(options)
    best = 0.0

    def visit(i, occupied, total):
        nonlocal best
        if i == len(entities):
            best = max(best, total)
            return
        visit(i + 1, occupied, total)
        for bits, score in options[entities[i]]:
            if not bits & occupied:
                visit(i + 1, occupied | bits, total + score)

    visit(0, 0, 0.0)
    return best


def test_movie_example(movie_pair, jaccard_low):
    """The movie question links movie, titles, 1945 and popularity"""
    annotation = annotate(movie_pair, jaccard_low)
    assert [label.value for label in annotation.labels] == MOVIE_LABELS
    links = {
        (link.span.start, link.span.end): (str(annotation.linked_entity(link)), round(link.score, 4))
        for link in annotation.links
    }
    assert links == {
        (1, 2): ("movies:T", 0.75),
        (2, 3): ("title:C", 0.75),
        (5, 6): ("1945:V", 1.0),
        (10, 11): ("pop:C", 0.125),
    }


def test_movie_example_higher_threshold(movie_pair):
    """At 0.2 the weak popularity/pop link disappears"""
    config = SimilarityConfig(measure=SimilarityMeasure.JACCARD3, threshold=0.2)
    labels = [label.value for label in annotate(movie_pair, config).labels]
    assert labels == MOVIE_LABELS[:-1] + ["O"]


def test_solver_matches_brute_force():
    """Exact optimum on random instances"""
    rng = random.Random(2024)
    for _ in range(1000):
        matrix, n_tokens = _random_instance(rng)
        alignment = solve(matrix, n_tokens)
        assert alignment.objective == pytest.approx(_brute_force(matrix), abs=1e-9)
        scores = matrix.scores
        for index, span in alignment.chosen.items():
            assert scores[(index, span.sort_key())] == alignment.scores[index]
        # positive scores saturate: an unlinked entity's candidates all clash with a chosen span
        for candidate in matrix.candidates:
            if candidate.entity_index not in alignment.chosen:
                assert any(candidate.span.overlaps(span) for span in alignment.chosen.values())


def test_disjoint_candidates_saturate():
    """When no candidates conflict, every entity with a candidate is linked"""
    rng = random.Random(5)
    for _ in range(100):
        n_entities = rng.randint(1, 8)
        tokens = rng.sample(range(12), n_entities)
        matrix = _matrix([(index, (t, t + 1), rng.uniform(0.1, 1.0)) for index, t in enumerate(tokens)])
        assert len(solve(matrix, 12).chosen) == n_entities


def test_tie_break_prefers_first_entity_then_leftmost_span():
    """Equal optima resolve canonically"""
    shared = solve(_matrix([(0, (0, 1), 0.5), (1, (0, 1), 0.5)]), 2)
    assert shared.chosen == {0: Span(start=0, end=1)}

    leftmost = solve(_matrix([(0, (3, 4), 0.5), (0, (1, 2), 0.5), (0, (1, 3), 0.5)]), 4)
    assert leftmost.chosen == {0: Span(start=1, end=2)}


def test_solver_prefers_total_over_greedy():
    """A single high score loses to two compatible links with a larger sum"""
    matrix = _matrix([(0, (0, 2), 0.9), (1, (0, 1), 0.6), (2, (1, 2), 0.6)])
    alignment = solve(matrix, 2)
    assert set(alignment.chosen) == {1, 2}
    assert alignment.objective == pytest.approx(1.2)


def test_solver_rejects_out_of_range_span():
    """Candidates must fit in the document"""
    with pytest.raises(ConsistencyError):
        solve(_matrix([(0, (2, 4), 0.5)]), 3)


def test_empty_inputs():
    """No entities or no tokens give an empty annotation"""
    config = SimilarityConfig(measure=SimilarityMeasure.JACCARD3, threshold=0.1)
    doc = tokenize("list everything")
    annotation = annotate_doc("e", doc, EntitySet(), config)
    assert annotation.links == ()
    assert annotation.labels == (Label.NONE, Label.NONE)
    assert solve(_matrix([]), 0).chosen == {}


def test_candidate_spans_respect_width_and_threshold():
    """No candidate is wider than the limit or below the threshold"""
    doc = tokenize("show the song names of singers from the united states")
    entities = EntitySet(entities=(
        DbEntity(text="song_name", entity_type=EntityType.COLUMN),
        DbEntity(text="United States", entity_type=EntityType.VALUE),
        DbEntity(text="singer", entity_type=EntityType.TABLE),
    ))
    config = SimilarityConfig(measure=SimilarityMeasure.LEVENSHTEIN, threshold=0.3)
    matrix = candidate_spans(doc, entities, config, max_span_tokens=3)
    assert len(matrix) > 0
    for candidate in matrix.candidates:
        assert candidate.span.width <= 3
        assert candidate.score >= 0.3
    with pytest.raises(ValueError):
        candidate_spans(doc, entities, config, max_span_tokens=0)


def test_candidate_at_exact_threshold_is_kept():
    """A span scoring exactly the threshold is a candidate"""
    entities = EntitySet(entities=(DbEntity(text="abcde", entity_type=EntityType.VALUE),))
    config = SimilarityConfig(measure=SimilarityMeasure.LEVENSHTEIN, threshold=0.2)
    matrix = candidate_spans(tokenize("vwxye"), entities, config)
    assert [(c.span.sort_key(), c.score) for c in matrix.candidates] == [((0, 1), 0.2)]


def test_restrict_equals_fresh_scoring():
    """Filtering a low-threshold matrix gives the matrix of the higher threshold"""
    doc = tokenize("Name movie titles released in 1945, and order by popularity")
    entities = EntitySet(entities=tuple(
        DbEntity(text=text, entity_type=EntityType(kind))
        for text, kind in (("title", "C"), ("movies", "T"), ("year", "C"), ("1945", "V"), ("pop", "C"))
    ))
    for measure in SimilarityMeasure:
        base = candidate_spans(doc, entities, SimilarityConfig(measure=measure, threshold=0.1))
        previous = len(base)
        for threshold in THRESHOLD_GRID:
            config = SimilarityConfig(measure=measure, threshold=threshold)
            fresh = candidate_spans(doc, entities, config)
            assert base.restrict(threshold) == fresh
            assert len(fresh) <= previous
            previous = len(fresh)
    with pytest.raises(ValueError):
        base.restrict(0.05)


def test_annotation_invariants_on_random_questions():
    """Every link meets the threshold, spans are disjoint and labels follow links"""
    rng = random.Random(99)
    words = ["movie", "movies", "title", "titles", "year", "pop", "1945", "name", "the", "of", ","]
    sql = "SELECT title FROM movies WHERE year = 1945 ORDER BY pop"
    for i in range(200):
        question = " ".join(rng.choice(words) for _ in range(rng.randint(1, 10)))
        threshold = rng.choice(THRESHOLD_GRID)
        config = SimilarityConfig(measure=rng.choice(list(SimilarityMeasure)), threshold=threshold)
        annotation = annotate(RawPair(id=str(i), question=question, sql=sql), config)
        spans = sorted(link.span.sort_key() for link in annotation.links)
        assert all(left[1] <= right[0] for left, right in zip(spans, spans[1:]))
        assert all(link.score >= threshold for link in annotation.links)
        assert len(annotation.labels) == len(annotation.doc)


def test_annotate_reports_record_id_on_bad_sql():
    """Parse failures name the record"""
    config = SimilarityConfig(measure=SimilarityMeasure.JACCARD3, threshold=0.5)
    with pytest.raises(SqlParseError) as excinfo:
        annotate(RawPair(id="bad-7", question="list singers", sql="SELECT name FROM singer WHERE ("), config)
    assert excinfo.value.record_id == "bad-7"
