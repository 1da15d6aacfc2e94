"""Aspect-weighted opinion mining for rating prediction and recommendation.

Reviews are normalized and POS-tagged, a two-channel CNN tags aspect terms
and review polarity, aspect mentions are scored with an opinion lexicon and
clustered, CP decomposition weights the clusters, and a truncated-SVD user
neighborhood model predicts ratings from the weighted matrix.
"""

from .corpus import PolarityLabel, ReviewRecord, TokenSeq, Vocabulary, load_reviews, normalize
from .dcnn import DcnnConfig, DcnnModel, gradient_check
from .recommend import RatingModel, baseline_mf, truncated_svd

__all__ = [
    "DcnnConfig", "DcnnModel", "PolarityLabel", "RatingModel", "ReviewRecord", "TokenSeq",
    "Vocabulary", "baseline_mf", "gradient_check", "load_reviews", "normalize", "truncated_svd",
]
__version__ = "0.1.0"
