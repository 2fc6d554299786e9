"""
Batch annotation service.

Runs the synthetic annotator over many question/SQL pairs with joblib.
Output order always equals input order, whatever the number of workers.
"""

import logging
from typing import List, Optional, Sequence, Tuple, Union

from joblib import Parallel, delayed

from aligner import annotate
from config import JOBS, MAX_SPAN_TOKENS
from errors import SqlParseError
from models import RawPair
from schemas import AnnotatedRecord, SkipEntry
from similarity import SimilarityConfig

logger = logging.getLogger(__name__)


def _annotate_one(index: int, pair: RawPair, config: SimilarityConfig,
                  max_span_tokens: int) -> Union[AnnotatedRecord, SkipEntry]:
    try:
        annotation = annotate(pair, config, max_span_tokens)
    except SqlParseError as e:
        return SkipEntry(id=pair.id, index=index, reason=str(e))
    return AnnotatedRecord.from_annotation(annotation)


class AnnotationService:
    def __init__(self, config: SimilarityConfig, max_span_tokens: int = MAX_SPAN_TOKENS,
                 n_jobs: Optional[int] = None):
        self.config = config
        self.max_span_tokens = max_span_tokens
        self.n_jobs = JOBS if n_jobs is None else n_jobs

    def run(self, pairs: Sequence[RawPair]) -> Tuple[List[AnnotatedRecord], List[SkipEntry]]:
        """Annotate every pair; unparseable SQL is skipped and reported, never fatal."""
        if not pairs:
            return [], []
        results = Parallel(n_jobs=self.n_jobs)(
            delayed(_annotate_one)(index, pair, self.config, self.max_span_tokens)
            for index, pair in enumerate(pairs)
        )

        records: List[AnnotatedRecord] = []
        skipped: List[SkipEntry] = []
        for result in results:
            if isinstance(result, SkipEntry):
                logger.warning(f"Skipping record {result.id}: {result.reason}")
                skipped.append(result)
            else:
                records.append(result)
        logger.info(f"Annotated {len(records)} records with {self.config}, skipped {len(skipped)}")
        return records, skipped
