"""Image containers, file I/O, dataset ingestion and synthetic glyphs.

Gray images are ``uint8`` arrays of shape ``(height, width)``; binary images
are ``bool`` arrays of the same shape with ``True`` marking character ink.
Coordinates handed around the package are ``(x, y)`` with ``x`` to the right
and ``y`` downwards.
"""

from __future__ import annotations

import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError, ImageFormatError

log = logging.getLogger(__name__)

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
IMAGE_SUFFIXES = (".png", ".pgm")
UPPERCASE = tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")


def as_gray(data) -> np.ndarray:
    """Validate ``data`` as a gray image and return it as a ``uint8`` array."""
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"gray image must be a nonempty 2-D array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("gray intensities must lie in [0, 255]")
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("gray intensities must be integers")
        arr = arr.astype(np.uint8)
    return arr


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half-up to the nearest integer."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = LUMA_WEIGHTS
    luma = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Read an 8-bit gray or RGB PNG/PGM file as a gray image."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            mode = im.mode
            im.load()
            arr = np.asarray(im)
    except FileNotFoundError as exc:
        raise ImageFormatError(f"{path}: cannot read file ({exc.strerror})") from exc
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageFormatError(f"{path}: not a readable image ({exc})") from exc

    if fmt not in ("PNG", "PPM"):
        raise ImageFormatError(f"{path}: unsupported format {fmt!r} (expected PNG or PGM)")
    if mode == "L":
        return arr.astype(np.uint8)
    if mode == "RGB":
        return rgb_to_gray(arr)
    raise ImageFormatError(
        f"{path}: unsupported pixel mode {mode!r} (expected 8-bit gray or 8-bit RGB)"
    )


def save_pgm(path, img) -> None:
    """Write a gray (or boolean, ink=0 on 255) image as binary PGM (P5)."""
    arr = np.asarray(img)
    if arr.dtype == bool:
        arr = np.where(arr, 0, 255).astype(np.uint8)
    arr = as_gray(arr)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


@dataclass
class LabeledDataset:
    samples: list[tuple[np.ndarray, int]]
    alphabet: tuple[str, ...]
    provenance: str = ""
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet entries must be unique")
        for _, label in self.samples:
            if not 0 <= label < len(self.alphabet):
                raise ValueError(f"label {label} outside alphabet of size {len(self.alphabet)}")
        if not self.names:
            self.names = [f"{self.alphabet[lab]}_{i:04d}" for i, (_, lab) in enumerate(self.samples)]

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([lab for _, lab in self.samples], dtype=int)

    def class_indices(self, label: int) -> list[int]:
        return [i for i, (_, lab) in enumerate(self.samples) if lab == label]


_NAME_RE = re.compile(r"^(?P<label>.+?)_(?P<id>[^_]+)$")


def ingest_dataset(directory, alphabet) -> LabeledDataset:
    """Load every ``<LABEL>_<id>.<ext>`` image in ``directory``.

    Files are visited in lexicographic filename order. Files whose label is
    not in ``alphabet`` are skipped and reported in one warning.
    """
    directory = Path(directory)
    alphabet = tuple(alphabet)
    index = {name: i for i, name in enumerate(alphabet)}
    entries = sorted(os.listdir(directory)) if directory.is_dir() else None
    if entries is None:
        raise DataError(f"{directory}: not a directory")
    if not entries:
        raise DataError(f"{directory}: directory is empty")

    samples, names = [], []
    skipped: dict[str, int] = {}
    for fname in entries:
        stem, ext = os.path.splitext(fname)
        if ext.lower() not in IMAGE_SUFFIXES:
            continue
        m = _NAME_RE.match(stem)
        label = m.group("label") if m else None
        if label not in index:
            key = label if label is not None else "<unlabelled>"
            skipped[key] = skipped.get(key, 0) + 1
            continue
        samples.append((load_image(directory / fname), index[label]))
        names.append(stem)

    if skipped:
        summary = ", ".join(f"{k}: {v}" for k, v in sorted(skipped.items()))
        log.warning("skipped %d file(s) with labels outside the alphabet (%s)",
                    sum(skipped.values()), summary)
    if not samples:
        raise DataError(f"{directory}: zero files match the alphabet {list(alphabet)}")
    return LabeledDataset(samples, alphabet, provenance=f"dir:{directory}", names=names)


# Stroke templates on the unit square, (u, v) with v pointing down.
GLYPH_TEMPLATES: dict[str, list[list[tuple[float, float]]]] = {
    "A": [[(0, 1), (0.5, 0), (1, 1)], [(0.25, 0.5), (0.75, 0.5)]],
    "B": [[(0, 0), (0, 1)],
          [(0, 0), (0.65, 0), (0.8, 0.1), (0.8, 0.38), (0.65, 0.5), (0, 0.5)],
          [(0.65, 0.5), (0.9, 0.62), (0.9, 0.88), (0.7, 1), (0, 1)]],
    "C": [[(1, 0.15), (0.8, 0), (0.3, 0), (0, 0.3), (0, 0.7), (0.3, 1), (0.8, 1), (1, 0.85)]],
    "D": [[(0, 0), (0, 1)], [(0, 0), (0.6, 0), (1, 0.3), (1, 0.7), (0.6, 1), (0, 1)]],
    "E": [[(1, 0), (0, 0), (0, 1), (1, 1)], [(0, 0.5), (0.7, 0.5)]],
    "F": [[(1, 0), (0, 0), (0, 1)], [(0, 0.5), (0.7, 0.5)]],
    "G": [[(1, 0.15), (0.8, 0), (0.3, 0), (0, 0.3), (0, 0.7), (0.3, 1), (0.8, 1),
           (1, 0.8), (1, 0.55), (0.55, 0.55)]],
    "H": [[(0, 0), (0, 1)], [(1, 0), (1, 1)], [(0, 0.5), (1, 0.5)]],
    "I": [[(0.2, 0), (0.8, 0)], [(0.5, 0), (0.5, 1)], [(0.2, 1), (0.8, 1)]],
    "J": [[(0.3, 0), (1, 0)], [(0.75, 0), (0.75, 0.8), (0.55, 1), (0.2, 1), (0, 0.8)]],
    "K": [[(0, 0), (0, 1)], [(1, 0), (0, 0.55)], [(0.3, 0.4), (1, 1)]],
    "L": [[(0, 0), (0, 1), (1, 1)]],
    "M": [[(0, 1), (0, 0), (0.5, 0.6), (1, 0), (1, 1)]],
    "N": [[(0, 1), (0, 0), (1, 1), (1, 0)]],
    "O": [[(0.3, 0), (0.7, 0), (1, 0.3), (1, 0.7), (0.7, 1), (0.3, 1), (0, 0.7), (0, 0.3), (0.3, 0)]],
    "P": [[(0, 1), (0, 0), (0.7, 0), (1, 0.15), (1, 0.4), (0.7, 0.55), (0, 0.55)]],
    "Q": [[(0.3, 0), (0.7, 0), (1, 0.25), (1, 0.6), (0.7, 0.85), (0.3, 0.85), (0, 0.6), (0, 0.25),
           (0.3, 0)],
          [(0.55, 0.6), (0.95, 1)]],
    "R": [[(0, 1), (0, 0), (0.7, 0), (1, 0.15), (1, 0.4), (0.7, 0.55), (0, 0.55)],
          [(0.45, 0.55), (1, 1)]],
    "S": [[(1, 0.15), (0.8, 0), (0.2, 0), (0, 0.2), (0.2, 0.45), (0.8, 0.55), (1, 0.8),
           (0.8, 1), (0.2, 1), (0, 0.85)]],
    "T": [[(0, 0), (1, 0)], [(0.5, 0), (0.5, 1)]],
    "U": [[(0, 0), (0, 0.75), (0.25, 1), (0.75, 1), (1, 0.75), (1, 0)]],
    "V": [[(0, 0), (0.5, 1), (1, 0)]],
    "W": [[(0, 0), (0.25, 1), (0.5, 0.4), (0.75, 1), (1, 0)]],
    "X": [[(0, 0), (1, 1)], [(1, 0), (0, 1)]],
    "Y": [[(0, 0), (0.5, 0.5), (1, 0)], [(0.5, 0.5), (0.5, 1)]],
    "Z": [[(0, 0), (1, 0), (0, 1), (1, 1)]],
}


@dataclass(frozen=True)
class GlyphGenConfig:
    """Parameters of the synthetic glyph renderer.

    Attributes:
        canvas: Side length of the square canvas in pixels.
        stroke_width: Nominal pen width in pixels.
        jitter_translate: Max absolute per-sample shift (pixels, each axis).
        jitter_stroke: Max absolute per-sample change of the pen width.
        samples_per_class: Number of renderings per alphabet entry.
        seed: Seed for all per-sample randomness.
    """

    canvas: int = 32
    stroke_width: float = 3.0
    jitter_translate: float = 0.0
    jitter_stroke: float = 0.0
    samples_per_class: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.canvas < 24:
            raise ValueError("canvas must be at least 24 pixels")
        if self.stroke_width < 1:
            raise ValueError("stroke_width must be >= 1")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if self.jitter_translate < 0 or self.jitter_stroke < 0:
            raise ValueError("jitter amplitudes must be nonnegative")

    @property
    def margin(self) -> int:
        reach = self.stroke_width / 2 + self.jitter_stroke / 2 + self.jitter_translate
        return int(math.ceil(reach)) + 1


def template_to_pixels(strokes, canvas: int, margin: int, dx: float = 0.0, dy: float = 0.0):
    """Map unit-square polylines to pixel-space polylines (x, y)."""
    span = canvas - 1 - 2 * margin
    if span < 2:
        raise ValueError("canvas too small for the requested margin")
    return [[(margin + u * span + dx, margin + v * span + dy) for u, v in stroke]
            for stroke in strokes]


def render_polylines(polylines, canvas: int, width: float) -> np.ndarray:
    """Rasterise polylines as round-capped strokes.

    A pixel is ink when its centre lies within ``width / 2`` of any segment.
    Returns a boolean ink mask.
    """
    ys, xs = np.mgrid[0:canvas, 0:canvas].astype(np.float64)
    best = np.full((canvas, canvas), np.inf)
    for line in polylines:
        for (x0, y0), (x1, y1) in zip(line[:-1], line[1:]):
            vx, vy = x1 - x0, y1 - y0
            seg_len2 = vx * vx + vy * vy
            if seg_len2 == 0:
                t = np.zeros_like(xs)
            else:
                t = np.clip(((xs - x0) * vx + (ys - y0) * vy) / seg_len2, 0.0, 1.0)
            d2 = (xs - x0 - t * vx) ** 2 + (ys - y0 - t * vy) ** 2
            np.minimum(best, d2, out=best)
    radius = width / 2.0
    return best <= radius * radius + 1e-9


def generate_glyphs(cfg: GlyphGenConfig, alphabet=UPPERCASE) -> LabeledDataset:
    """Render ``cfg.samples_per_class`` jittered copies of every template.

    Ink is drawn at intensity 0 on a 255 background. Samples are ordered
    class by class, following ``alphabet``.
    """
    alphabet = tuple(alphabet)
    missing = [a for a in alphabet if a not in GLYPH_TEMPLATES]
    if missing:
        raise ValueError(f"no stroke template for: {', '.join(missing)}")

    rng = np.random.default_rng(cfg.seed)
    samples, names = [], []
    for label, char in enumerate(alphabet):
        for k in range(cfg.samples_per_class):
            dx, dy = rng.uniform(-cfg.jitter_translate, cfg.jitter_translate, size=2)
            dw = rng.uniform(-cfg.jitter_stroke, cfg.jitter_stroke)
            width = max(1.0, cfg.stroke_width + dw)
            lines = template_to_pixels(GLYPH_TEMPLATES[char], cfg.canvas, cfg.margin, dx, dy)
            ink = render_polylines(lines, cfg.canvas, width)
            samples.append((np.where(ink, 0, 255).astype(np.uint8), label))
            names.append(f"{char}_{k:04d}")
    return LabeledDataset(samples, alphabet, provenance=f"synthetic:{cfg}", names=names)


def write_dataset(ds: LabeledDataset, directory) -> list[Path]:
    """Dump a dataset as ``<LABEL>_<id>.pgm`` files; returns the paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (img, _) in zip(ds.names, ds.samples):
        p = directory / f"{name}.pgm"
        save_pgm(p, img)
        paths.append(p)
    return paths
