"""Category-aware topic analysis of racist and xenophobic tweets across Covid-19 stages."""

from xenotopics.corpus import (
    CategoryLabel,
    Stage,
    StageWindow,
    TweetRecord,
    DEFAULT_WINDOWS,
    assign_stage,
    filter_by_hashtags,
    ingest_corpus,
)
from xenotopics.lda import TopicModelParams, TopicModelState, train

__version__ = "0.1.0"

__all__ = [
    "CategoryLabel",
    "Stage",
    "StageWindow",
    "TweetRecord",
    "DEFAULT_WINDOWS",
    "assign_stage",
    "filter_by_hashtags",
    "ingest_corpus",
    "TopicModelParams",
    "TopicModelState",
    "train",
]
