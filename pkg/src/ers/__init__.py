"""EasyRead Score (ERS): accessibility-oriented image metrics.

Six raw measurements (palette complexity, edge density, saliency
concentration, foreground-background contrast, relative stroke
thickness, centering error), their normalizations into [0, 1], and the
weighted aggregate score, plus corpus-level batch scoring and
distribution comparison.
"""

from .image_io import AnalysisConfig, DecodeError, PixelImage, ZeroDimension, decode_image
from .raw_metrics import RawMetrics, compute_raw
from .scoring import ErsRecord, ScoringConfig, SubScores, score_image

__all__ = [
    "AnalysisConfig",
    "DecodeError",
    "ErsRecord",
    "PixelImage",
    "RawMetrics",
    "ScoringConfig",
    "SubScores",
    "ZeroDimension",
    "compute_raw",
    "decode_image",
    "score_image",
]

__version__ = "0.1.0"
