"""Grayscale -> Otsu binarization -> Zhang-Suen thinning -> bounding-box crop."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import BlankImageError, DataError
from .imaging import as_gray

EIGHT = np.ones((3, 3), dtype=bool)

# Smallest crop side handed to the 3x3 zoning stage.
MIN_CROP = 3


def otsu_threshold(img) -> int:
    """Threshold minimising the weighted within-class variance.

    Class 0 holds intensities ``<= t``, class 1 those ``> t``. The criterion is
    evaluated in exact rational arithmetic over all 256 candidates; among the
    minimisers the smallest ``t`` whose class 0 is nonempty wins, so a constant
    image returns its own intensity.
    """
    gray = as_gray(img)
    hist = np.bincount(gray.ravel(), minlength=256)
    levels = np.arange(256)
    n_cum = [int(v) for v in np.cumsum(hist)]
    m_cum = [int(v) for v in np.cumsum(hist * levels)]
    q_cum = [int(v) for v in np.cumsum(hist * levels * levels)]
    n_tot, m_tot, q_tot = n_cum[-1], m_cum[-1], q_cum[-1]

    best_t, best = None, None
    for t in range(256):
        n0 = n_cum[t]
        if n0 == 0:
            continue
        n1 = n_tot - n0
        # sum of squared deviations of each class, times its count
        score = Fraction(n0 * q_cum[t] - m_cum[t] ** 2, n0)
        if n1:
            m1 = m_tot - m_cum[t]
            score += Fraction(n1 * (q_tot - q_cum[t]) - m1 * m1, n1)
        if best is None or score < best:
            best_t, best = t, score
    return best_t


def binarize(img, t: int, polarity: str = "dark") -> np.ndarray:
    """Foreground mask: ``<= t`` for dark ink, ``> t`` for light ink."""
    gray = as_gray(img)
    if polarity == "dark":
        return gray <= t
    if polarity == "light":
        return gray > t
    raise ValueError(f"polarity must be 'dark' or 'light', not {polarity!r}")


def _ring(padded: np.ndarray):
    """P2..P9 neighbour planes (N, NE, E, SE, S, SW, W, NW) of a 1-padded mask."""
    p = padded
    return (p[:-2, 1:-1], p[:-2, 2:], p[1:-1, 2:], p[2:, 2:],
            p[2:, 1:-1], p[2:, :-2], p[1:-1, :-2], p[:-2, :-2])


def neighbour_stats(mask: np.ndarray):
    """Per-pixel neighbour count B(p) and 0->1 transition count A(p)."""
    ring = [r.astype(np.int8) for r in _ring(np.pad(mask, 1))]
    count = sum(ring)
    trans = sum(((a == 0) & (b == 1)).astype(np.int8)
                for a, b in zip(ring, ring[1:] + ring[:1]))
    return count, trans, ring


def zhang_suen_candidates(mask: np.ndarray, step: int) -> np.ndarray:
    """Pixels deletable in sub-iteration ``step`` (1 or 2) of Zhang-Suen."""
    count, trans, (p2, _, p4, _, p6, _, p8, _) = neighbour_stats(mask)
    base = mask & (count >= 2) & (count <= 6) & (trans == 1)
    if step == 1:
        return base & ((p2 & p4 & p6) == 0) & ((p4 & p6 & p8) == 0)
    return base & ((p2 & p4 & p8) == 0) & ((p2 & p6 & p8) == 0)


def count_components(mask: np.ndarray) -> int:
    return int(ndimage.label(mask, structure=EIGHT)[1])


def _local_stats(mask: np.ndarray, y: int, x: int):
    win = np.pad(mask, 1)[y:y + 3, x:x + 3]
    ring = [win[0, 1], win[0, 2], win[1, 2], win[2, 2], win[2, 1], win[2, 0], win[1, 0], win[0, 0]]
    count = sum(ring)
    trans = sum(1 for a, b in zip(ring, ring[1:] + ring[:1]) if not a and b)
    return count, trans


def _delete_sequentially(mask: np.ndarray, cand: np.ndarray) -> int:
    # Raster-order deletion, re-checking the simple-point conditions each time.
    removed = 0
    for y, x in zip(*np.nonzero(cand)):
        count, trans = _local_stats(mask, y, x)
        if 2 <= count <= 6 and trans == 1:
            mask[y, x] = False
            removed += 1
    return removed


def thin(mask) -> np.ndarray:
    """Zhang-Suen thinning iterated to a fixpoint.

    Each sub-iteration deletes its candidates in parallel, as in the classic
    algorithm. When the parallel deletion would change the number of
    8-connected components (2x2 blocks, two-pixel diagonals), that
    sub-iteration falls back to raster-order deletion with the candidate
    conditions re-checked after every removal, which never alters topology.
    """
    mask = np.array(mask, dtype=bool, copy=True)
    n_comp = count_components(mask)
    changed = True
    while changed:
        changed = False
        for step in (1, 2):
            cand = zhang_suen_candidates(mask, step)
            if not cand.any():
                continue
            trial = mask & ~cand
            if count_components(trial) == n_comp:
                mask = trial
            else:
                _delete_sequentially(mask, cand)
            changed = True
    return mask


def neighbour_count(mask: np.ndarray) -> np.ndarray:
    """Number of 8-neighbours in ``mask`` for every pixel."""
    m = mask.astype(np.int16)
    return ndimage.convolve(m, np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=np.int16),
                            mode="constant", cval=0)


def junction_mask(mask: np.ndarray) -> np.ndarray:
    """Skeleton pixels where three or more separate branches meet.

    A pixel counts when it has at least three neighbours and at least three
    0->1 transitions around its ring. The second test keeps the staircase
    pixels next to a right-angle corner (three neighbours, two branches) out.
    """
    mask = np.asarray(mask, dtype=bool)
    count, trans, _ = neighbour_stats(mask)
    return mask & (count >= 3) & (trans >= 3)


@dataclass(frozen=True)
class Skeleton:
    image: np.ndarray
    junctions: frozenset
    endpoints: frozenset

    @classmethod
    def from_mask(cls, mask) -> "Skeleton":
        mask = np.asarray(mask, dtype=bool)
        nb = neighbour_count(mask)
        junc = frozenset((int(x), int(y)) for y, x in zip(*np.nonzero(junction_mask(mask))))
        ends = frozenset((int(x), int(y)) for y, x in zip(*np.nonzero(mask & (nb == 1))))
        return cls(mask, junc, ends)

    @property
    def shape(self):
        return self.image.shape


def skeletonize(img) -> Skeleton:
    mask = np.asarray(img, dtype=bool)
    if not mask.any():
        raise BlankImageError("cannot skeletonize an image without foreground")
    return Skeleton.from_mask(thin(mask))


class BoundingBox(NamedTuple):
    """Inclusive pixel box ``(x0, y0, x1, y1)``."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    def crop(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.y0:self.y1 + 1, self.x0:self.x1 + 1]


def bounding_box(mask) -> BoundingBox:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise BlankImageError("bounding box of an empty mask is undefined")
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return BoundingBox(int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1]))


def _pad_to_min(arr: np.ndarray, fill) -> np.ndarray:
    h, w = arr.shape
    ph, pw = max(0, MIN_CROP - h), max(0, MIN_CROP - w)
    if not ph and not pw:
        return arr
    return np.pad(arr, ((ph // 2, ph - ph // 2), (pw // 2, pw - pw // 2)),
                  constant_values=fill)


@dataclass(frozen=True)
class Preprocessed:
    """Output of :func:`preprocess`; all images share the cropped shape."""

    skeleton: Skeleton
    binary: np.ndarray
    gray: np.ndarray
    box: BoundingBox
    threshold: int

    def __iter__(self):
        # unpacks as (skeleton, binary)
        return iter((self.skeleton, self.binary))


def preprocess(img, polarity: str = "dark") -> Preprocessed:
    """Run the full preprocessing chain on a gray image.

    The crop box is taken from the skeleton. Crops narrower or shorter than
    three pixels are padded with background, centred, so that 3x3 zoning
    always applies.

    Raises:
        BlankImageError: if the image is uniform or nothing is left after
            binarization.
    """
    gray = as_gray(img)
    t = otsu_threshold(gray)
    binary = binarize(gray, t, polarity)
    # a uniform image has no ink/background split, whatever the threshold says
    if not binary.any() or gray.min() == gray.max():
        raise BlankImageError("blank image: no foreground after binarization")
    skel_mask = thin(binary)
    box = bounding_box(skel_mask)
    bg = 255 if polarity == "dark" else 0
    skel_c = _pad_to_min(box.crop(skel_mask), False)
    bin_c = _pad_to_min(box.crop(binary), False)
    gray_c = _pad_to_min(box.crop(gray), bg)
    return Preprocessed(Skeleton.from_mask(skel_c), bin_c, gray_c, box, t)


def check_same_shape(*arrays) -> None:
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise DataError(f"dimension mismatch between inputs: {sorted(shapes)}")
