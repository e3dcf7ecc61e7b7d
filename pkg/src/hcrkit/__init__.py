"""Handwritten character recognition with multi-zone skeleton features."""

__version__ = "0.1.0"

from .classify import MdcModel, fit_mdc, predict_mdc
from .errors import BlankImageError, DataError, HcrError, ImageFormatError, NumericalError
from .features import (
    FeatureVector,
    extract,
    extract_geometric,
    extract_gradient,
    extract_hybrid,
    extract_proposed,
)
from .imaging import GlyphGenConfig, LabeledDataset, generate_glyphs, ingest_dataset, load_image
from .mlp import MlpModel, TrainConfig, init_mlp, predict_mlp, train_bp, train_lm
from .preprocess import Skeleton, preprocess, skeletonize

__all__ = [
    "BlankImageError", "DataError", "FeatureVector", "GlyphGenConfig", "HcrError",
    "ImageFormatError", "LabeledDataset", "MdcModel", "MlpModel", "NumericalError",
    "Skeleton", "TrainConfig", "extract", "extract_geometric", "extract_gradient",
    "extract_hybrid", "extract_proposed", "fit_mdc", "generate_glyphs", "ingest_dataset",
    "init_mlp", "load_image", "predict_mdc", "predict_mlp", "preprocess", "skeletonize",
    "train_bp", "train_lm",
]
