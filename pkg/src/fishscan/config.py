"""Pipeline configuration: every tunable parameter in one serializable record."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .colorspace import DEFAULT_WHITE, WhitePoint
from .enhance import ClaheConfig
from .errors import BadParameter

ENHANCE_ORDERS = ("before_lab", "after_lab", "none")
CLASSIFIERS = ("svm", "decision_tree", "logistic_regression", "naive_bayes")


@dataclass(frozen=True)
class PipelineConfig:
    target_width: int = 600
    target_height: int = 250
    resize_end_condition: str = "not-a-knot"
    # before_lab: equalize RGB luma, then convert; after_lab: equalize L*
    enhance_order: str = "before_lab"
    clahe_clip: float = 0.01
    clahe_alpha: float = 0.04
    clahe_tiles_x: int = 8
    clahe_tiles_y: int = 8
    clahe_bins: int = 256
    white_point: tuple = (DEFAULT_WHITE.xn, DEFAULT_WHITE.yn, DEFAULT_WHITE.zn)
    segment_k: int = 3
    segment_use_lightness: bool = False
    segment_max_iter: int = 100
    segment_tol: float = 1e-6
    glcm_levels: int = 16
    glcm_distance: int = 1
    classifier: str = "svm"
    kernel: str = "linear"
    kernel_degree: int = 3
    kernel_gamma: float = 0.1
    kernel_coef0: float = 0.0
    svm_c: float = 1.0
    svm_tol: float = 1e-3
    svm_max_passes: int = 200
    tree_max_depth: int = 5
    logreg_learning_rate: float = 0.1
    logreg_epochs: int = 2000
    nb_var_floor: float = 1e-9
    split_ratio: float = 0.868
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "white_point", tuple(float(v) for v in self.white_point))
        if self.target_width < 2 or self.target_height < 2:
            raise BadParameter("target size must be at least 2x2")
        if self.enhance_order not in ENHANCE_ORDERS:
            raise BadParameter(f"enhance_order must be one of {ENHANCE_ORDERS}")
        if self.classifier not in CLASSIFIERS:
            raise BadParameter(f"classifier must be one of {CLASSIFIERS}")
        if self.segment_k < 1:
            raise BadParameter("segment_k must be at least 1")
        if self.glcm_levels < 2 or self.glcm_distance < 1:
            raise BadParameter("glcm_levels must be >= 2 and glcm_distance >= 1")
        if not 0.0 < self.split_ratio < 1.0:
            raise BadParameter("split_ratio must lie strictly between 0 and 1")
        if self.svm_c <= 0:
            raise BadParameter("svm_c must be positive")
        # constructing these validates their ranges
        self.clahe_config()
        self.white()
        self.kernel_spec()

    def clahe_config(self) -> ClaheConfig:
        return ClaheConfig(clip_limit=self.clahe_clip, alpha=self.clahe_alpha,
                           tiles_x=self.clahe_tiles_x, tiles_y=self.clahe_tiles_y,
                           bins=self.clahe_bins)

    def white(self) -> WhitePoint:
        return WhitePoint(*self.white_point)

    def kernel_spec(self):
        from .svm import KernelSpec
        return KernelSpec(kind=self.kernel, degree=self.kernel_degree,
                          gamma=self.kernel_gamma, coef0=self.kernel_coef0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["white_point"] = list(self.white_point)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise BadParameter(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.from_dict(json.loads(text))

    def replace(self, **changes) -> "PipelineConfig":
        d = self.to_dict()
        d.update(changes)
        return type(self).from_dict(d)
