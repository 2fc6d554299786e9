import pytest

from aligner import annotate
from calibration import augment, calibrate
from errors import CalibrationError
from metrics import calibration_objective
from models import GoldExample, Label, RawPair
from similarity import THRESHOLD_GRID, SimilarityConfig, SimilarityMeasure
from synthetic import synthetic_corpus

from .conftest import MOVIE_LABELS


def _cell(report, measure, threshold):
    return next(cell for cell in report.grid if cell.measure == measure and cell.threshold == threshold)


def _expected_best(report):
    rank = {SimilarityMeasure.JACCARD3: 0, SimilarityMeasure.LEVENSHTEIN: 1}
    top = max(cell.f1 for cell in report.grid)
    tied = [cell for cell in report.grid if cell.f1 == top]
    return min(tied, key=lambda cell: (-cell.threshold, rank[cell.measure]))


def _gold_from(pairs, config):
    gold = []
    for pair in pairs:
        annotation = annotate(pair, config)
        gold.append(GoldExample(id=pair.id, tokens=tuple(annotation.doc.texts), labels=annotation.labels,
                                sql=pair.sql, question=pair.question))
    return gold


def test_grid_has_twenty_cells(movie_gold):
    """Two measures times ten thresholds, measure-major"""
    report = calibrate([movie_gold], n_jobs=1)
    assert len(report.grid) == 20
    assert [cell.threshold for cell in report.grid[:10]] == list(THRESHOLD_GRID)
    assert {cell.measure for cell in report.grid[10:]} == {SimilarityMeasure.LEVENSHTEIN}


def test_movie_example_calibration(movie_gold):
    """Only the lowest jaccard threshold keeps the weak popularity/pop link"""
    report = calibrate([movie_gold], n_jobs=1)
    assert _cell(report, SimilarityMeasure.JACCARD3, 0.1).f1 == 1.0
    for threshold in THRESHOLD_GRID[1:]:
        assert _cell(report, SimilarityMeasure.JACCARD3, threshold).f1 < 1.0
    assert report.best_f1 == 1.0
    best = _expected_best(report)
    assert (report.best.measure, report.best.threshold) == (best.measure, best.threshold)
    assert report.skipped == 0


def test_generated_gold_is_recovered():
    """Gold produced at jaccard3@0.5 is reproduced exactly by that cell"""
    config = SimilarityConfig(measure=SimilarityMeasure.JACCARD3, threshold=0.5)
    gold = _gold_from(synthetic_corpus(25, seed=3), config)
    assert any(label is not Label.NONE for example in gold for label in example.labels)

    report = calibrate(gold, n_jobs=1)
    assert _cell(report, SimilarityMeasure.JACCARD3, 0.5).f1 == 1.0
    assert report.best_f1 == 1.0
    assert report.best.threshold >= 0.5
    best = _expected_best(report)
    assert (report.best.measure, report.best.threshold) == (best.measure, best.threshold)


def test_degenerate_gold_ties_to_highest_jaccard_threshold():
    """No entity tokens anywhere: every cell scores 0 and the tie-break picks jaccard3@1.0"""
    gold = [GoldExample(id="z", tokens=("zzz", "qqq"), labels=(Label.NONE, Label.NONE),
                        sql="SELECT a FROM b", question="zzz qqq")]
    report = calibrate(gold, n_jobs=1)
    assert all(cell.f1 == 0.0 for cell in report.grid)
    assert (report.best.measure, report.best.threshold) == (SimilarityMeasure.JACCARD3, 1.0)


def test_cell_f1_is_reproducible(movie_gold):
    """Rerunning annotate and the objective reproduces a cell"""
    report = calibrate([movie_gold], n_jobs=1)
    config = SimilarityConfig(measure=SimilarityMeasure.LEVENSHTEIN, threshold=0.3)
    predicted = annotate(movie_gold.as_pair(), config).labels
    expected = calibration_objective([(movie_gold.labels, predicted)], [movie_gold.id])
    cell = _cell(report, SimilarityMeasure.LEVENSHTEIN, 0.3)
    assert cell.f1 == expected.micro.f1
    assert cell.report == expected


def test_parallel_calibration_is_identical():
    """Worker count does not change the report"""
    config = SimilarityConfig(measure=SimilarityMeasure.LEVENSHTEIN, threshold=0.6)
    gold = _gold_from(synthetic_corpus(12, seed=9), config)
    assert calibrate(gold, n_jobs=1) == calibrate(gold, n_jobs=2)


def test_unusable_examples_are_skipped(movie_gold):
    """Mismatched tokens or unparseable SQL exclude an example and are counted"""
    mismatched = GoldExample(id="m", tokens=("Name", "movies"), labels=(Label.NONE, Label.TABLE),
                             sql="SELECT * FROM movies", question="Name movie")
    broken = GoldExample(id="b", tokens=("list", "singers"), labels=(Label.NONE, Label.TABLE),
                         sql="SELECT name FROM singer WHERE (")
    report = calibrate([movie_gold, mismatched, broken], n_jobs=1)
    assert report.skipped == 2
    assert report.skipped_ids == ["m", "b"]
    assert _cell(report, SimilarityMeasure.JACCARD3, 0.1).f1 == 1.0


def test_no_usable_examples():
    """Calibration needs SQL and at least one usable example"""
    with pytest.raises(CalibrationError):
        calibrate([GoldExample(id="n", tokens=("x",), labels=(Label.NONE,))], n_jobs=1)
    broken = GoldExample(id="b", tokens=("x",), labels=(Label.NONE,), sql="SELECT (")
    with pytest.raises(CalibrationError):
        calibrate([broken], n_jobs=1)


def test_augment(movie_pair, jaccard_low):
    """Annotates in input order and reports malformed SQL"""
    pairs = [
        movie_pair,
        RawPair(id="bad", question="list singers", sql="SELECT name FROM singer WHERE ("),
        RawPair(id="ok", question="list singer names", sql="SELECT name FROM singer"),
    ]
    records, skipped = augment(pairs, jaccard_low, n_jobs=1)
    assert [record.id for record in records] == ["movie", "ok"]
    assert [label.value for label in records[0].labels] == MOVIE_LABELS
    assert [(entry.id, entry.index) for entry in skipped] == [("bad", 1)]
    assert "record bad" in skipped[0].reason

    assert augment([], jaccard_low, n_jobs=1) == ([], [])
