"""Minimum distance (nearest class mean) classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MdcModel:
    class_means: np.ndarray  # (n_classes, d)
    alphabet: tuple[str, ...]
    extractor: str

    @property
    def dim(self) -> int:
        return self.class_means.shape[1]

    def to_json(self) -> str:
        return json.dumps({"alphabet": list(self.alphabet), "extractor": self.extractor,
                           "means": self.class_means.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "MdcModel":
        obj = json.loads(text)
        return cls(np.array(obj["means"], dtype=float), tuple(obj["alphabet"]), obj["extractor"])


def _as_matrix(vectors) -> tuple[np.ndarray, str | None]:
    tags = {getattr(v, "extractor", None) for v in vectors}
    if len(tags) > 1:
        raise ValueError(f"mixed extractor tags in training data: {sorted(map(str, tags))}")
    rows = [np.asarray(getattr(v, "values", v), dtype=float) for v in vectors]
    if len({r.shape for r in rows}) != 1:
        raise ValueError("training vectors have mixed dimensions")
    return np.vstack(rows), tags.pop()


def fit_mdc(train, alphabet, extractor: str | None = None) -> MdcModel:
    """Average the training vectors of each class.

    Args:
        train: Sequence of ``(vector, label)`` pairs; vectors are
            :class:`~hcrkit.features.FeatureVector` or plain arrays.
        alphabet: Class names, indexed by label.
        extractor: Tag to store when the vectors carry none.
    """
    if not train:
        raise ValueError("no training samples")
    vectors, labels = zip(*train)
    X, tag = _as_matrix(vectors)
    labels = np.asarray(labels)
    means = []
    for k, name in enumerate(alphabet):
        rows = X[labels == k]
        if len(rows) == 0:
            raise ValueError(f"class {name!r} has no training samples")
        means.append(rows.mean(axis=0))
    return MdcModel(np.vstack(means), tuple(alphabet), tag or extractor or "")


def mdc_distances(model: MdcModel, x) -> np.ndarray:
    """Squared Euclidean distances from ``x`` to every class mean."""
    x = np.asarray(getattr(x, "values", x), dtype=float)
    if x.shape != (model.dim,):
        raise ValueError(f"expected a {model.dim}-dim vector, got shape {x.shape}")
    diff = model.class_means - x
    return np.einsum("ij,ij->i", diff, diff)


def predict_mdc(model: MdcModel, x) -> int:
    """Index of the nearest class mean; ties go to the lowest index."""
    return int(np.argmin(mdc_distances(model, x)))
