"""emolink: significance-filtered emotion co-occurrence networks from text corpora.

The pipeline: match six-dimension lexicon words in timestamped posts, count
within-post word-pair co-occurrences per time window, score each pair against
a constrained permutation null model, keep links passing dual significance
thresholds, aggregate them into a 21-link emotion network, and compare
snapshots with rank correlation, Jaccard overlap and two-sample tests.
"""

from .errors import (
    ConfigError,
    DataError,
    DegenerateStatisticsError,
    EmolinkError,
    SamplerError,
)
from .lexicon import DIMS, EmotionDim, Lexicon, load_lexicon, match_concepts

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DegenerateStatisticsError",
    "EmolinkError",
    "SamplerError",
    "DIMS",
    "EmotionDim",
    "Lexicon",
    "load_lexicon",
    "match_concepts",
    "__version__",
]
