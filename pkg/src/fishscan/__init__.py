"""Fresh versus infected fish classification from color images.

The pipeline resizes with cubic B-splines, equalizes contrast with a
Rayleigh-shaped CLAHE, converts to CIELAB, isolates the lesion cluster with
k-means, describes it with ten statistical and co-occurrence features and
classifies it with a soft-margin SVM trained by SMO.
"""
from .config import PipelineConfig
from .errors import BadParameter, DataError, FishScanError, NonConvergence
from .features import FEATURE_NAMES, FeatureVector, extract_feature_vector, run_pipeline
from .metrics import ConfusionMatrix, MetricReport, confusion, metric_report, roc_curve
from .raster import RgbImage, load_image
from .svm import SvmModel, model_from_json, model_to_json, train_svm

__version__ = "0.1.0"

__all__ = [
    "BadParameter", "ConfusionMatrix", "DataError", "FEATURE_NAMES", "FeatureVector",
    "FishScanError", "MetricReport", "NonConvergence", "PipelineConfig", "RgbImage",
    "SvmModel", "confusion", "extract_feature_vector", "load_image", "metric_report",
    "model_from_json", "model_to_json", "roc_curve", "run_pipeline", "train_svm",
]
