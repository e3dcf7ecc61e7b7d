"""Zoning, skeleton line analysis and the four feature extractors.

Vector layouts (all per zone, zones in row-major order):

* ``geometric`` (81): 3x3 zones x [count H, V, RD, LD; length H, V, RD, LD; area]
* ``hybrid`` (90): 3x3 zones x the 9 above + intersection count
* ``proposed`` (145): geometric block, then 3 horizontal bands and 3 vertical
  bands with the 10 hybrid features each, then 4 whole-image features
* ``gradient`` (72): 3x3 zones x 8-bin Sobel orientation histogram

Counts are encoded as ``1 - 2 n / 10`` (clamped at -1), lengths and areas as
pixel fractions of the zone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .preprocess import EIGHT, Preprocessed, Skeleton, check_same_shape, junction_mask

MIN_SEGMENT = 3
TURN_SPLIT_DEG = 45.0
DIAG_LOW_DEG = 22.5
DIAG_HIGH_DEG = 67.5
ISOTROPY_RATIO = 1.1
GRADIENT_BINS = 8

EXTRACTORS = ("proposed", "geometric", "hybrid", "gradient")
DIMENSIONS = {"proposed": 145, "geometric": 81, "hybrid": 90, "gradient": 72}


class Direction(str, Enum):
    H = "H"
    V = "V"
    RD = "RD"  # '/'
    LD = "LD"  # '\'


DIRECTIONS = (Direction.H, Direction.V, Direction.RD, Direction.LD)


class Zone(NamedTuple):
    """Half-open pixel rectangle ``[x, x + w) x [y, y + h)``."""

    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    def contains(self, px: int, py: int) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def view(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.y:self.y + self.h, self.x:self.x + self.w]


@dataclass(frozen=True)
class ZoneGrid:
    rows: int
    cols: int
    zones: tuple[Zone, ...]


def split_lengths(total: int, parts: int) -> list[int]:
    """Near-equal partition of ``total`` with the larger parts first."""
    q, r = divmod(total, parts)
    return [q + 1] * r + [q] * (parts - r)


def partition_zones(width: int, height: int, rows: int, cols: int) -> ZoneGrid:
    if rows < 1 or cols < 1:
        raise ValueError("zone grid needs at least one row and one column")
    if width < cols or height < rows:
        raise ValueError(f"{width}x{height} image is smaller than a {rows}x{cols} zone grid")
    xs = np.concatenate([[0], np.cumsum(split_lengths(width, cols))])
    ys = np.concatenate([[0], np.cumsum(split_lengths(height, rows))])
    zones = tuple(Zone(int(xs[c]), int(ys[r]), int(xs[c + 1] - xs[c]), int(ys[r + 1] - ys[r]))
                  for r in range(rows) for c in range(cols))
    return ZoneGrid(rows, cols, zones)


@dataclass(frozen=True)
class Segment:
    pixels: tuple[tuple[int, int], ...]
    kind: str = "path"
    direction: Direction | None = None

    def __len__(self):
        return len(self.pixels)

    @property
    def anchor(self) -> tuple[int, int]:
        """Topmost, then leftmost pixel."""
        return min(self.pixels, key=lambda p: (p[1], p[0]))


def _skeleton_mask(skel) -> np.ndarray:
    return skel.image if isinstance(skel, Skeleton) else np.asarray(skel, dtype=bool)


def _segment_graph(mask: np.ndarray) -> dict:
    """8-adjacency between non-junction skeleton pixels, keyed by (x, y).

    A diagonal link is dropped when one of the two pixels it cuts across is a
    junction: the arms of a '+' touch diagonally once its centre is removed,
    yet they are separate strokes.
    """
    junc = junction_mask(mask)
    free = mask & ~junc
    h, w = mask.shape
    graph = {}
    for y, x in zip(*np.nonzero(free)):
        x, y = int(x), int(y)
        nbrs = []
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                nx, ny = x + dx, y + dy
                if not (dx or dy) or not (0 <= nx < w and 0 <= ny < h) or not free[ny, nx]:
                    continue
                if dx and dy and (junc[y, nx] or junc[ny, x]):
                    continue
                nbrs.append((nx, ny))
        graph[(x, y)] = nbrs
    return graph


def _components(graph: dict) -> list[list]:
    seen, comps = set(), []
    for start in sorted(graph, key=lambda p: (p[1], p[0])):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for p in graph[cur]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        comps.append(comp)
    return comps


def _walk(graph: dict, start):
    order, seen = [start], {start}
    cur = start
    while True:
        nxt = [p for p in graph[cur] if p not in seen]
        if not nxt:
            return order
        # a 4-neighbour first, so staircase corners are not skipped
        cur = min(nxt, key=lambda p: (abs(p[0] - cur[0]) + abs(p[1] - cur[1]), p[1], p[0]))
        order.append(cur)
        seen.add(cur)


def extract_segments(skel) -> list[Segment]:
    """Junction-free skeleton paths and loops of at least three pixels.

    Junctions are pixels where three or more branches meet. After removing
    them each connected piece is a path or a loop, possibly with staircase
    corners. Segments come out sorted by their topmost-then-leftmost pixel.
    """
    graph = _segment_graph(_skeleton_mask(skel))
    segments = []
    for comp in _components(graph):
        if len(comp) < MIN_SEGMENT:
            continue
        key = lambda p: (p[1], p[0])
        ends = [p for p in comp if len(graph[p]) <= 1]
        # a path starts at its upper-left endpoint, a loop at its upper-left pixel
        start = min(ends or comp, key=key)
        kind = "path" if ends else "loop"
        segments.append(Segment(tuple(_walk(graph, start)), kind))
    segments.sort(key=lambda s: (s.anchor[1], s.anchor[0]))
    return segments


def _chord_turn(pts: np.ndarray, k: int) -> float:
    a = pts[k] - pts[0]
    b = pts[-1] - pts[k]
    na, nb = math.hypot(*a), math.hypot(*b)
    if na == 0 or nb == 0:
        return 0.0
    c = float(np.dot(a, b)) / (na * nb)
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def split_at_turns(seg: Segment) -> list[Segment]:
    """Split a bent path at its sharpest corner, recursively.

    The turn at pixel ``k`` is the angle between the chords ``first -> k`` and
    ``k -> last``. When the largest turn exceeds 45 degrees the path is cut
    after pixel ``k``; both parts must keep at least three pixels.
    """
    n = len(seg.pixels)
    if seg.kind != "path" or n < 2 * MIN_SEGMENT:
        return [seg]
    pts = np.array(seg.pixels, dtype=float)
    best_k, best = None, TURN_SPLIT_DEG
    for k in range(MIN_SEGMENT - 1, n - MIN_SEGMENT):
        turn = _chord_turn(pts, k)
        if turn > best:
            best_k, best = k, turn
    if best_k is None:
        return [seg]
    head = Segment(seg.pixels[:best_k + 1], "path")
    tail = Segment(seg.pixels[best_k + 1:], "path")
    return split_at_turns(head) + split_at_turns(tail)


def _fold(theta: float) -> float:
    while theta > 90.0:
        theta -= 180.0
    while theta <= -90.0:
        theta += 180.0
    return theta


def bucket_angle(theta: float) -> Direction:
    """Direction class of a line angle in degrees (x right, y down)."""
    theta = _fold(theta)
    if abs(theta) <= DIAG_LOW_DEG:
        return Direction.H
    if abs(theta) >= DIAG_HIGH_DEG:
        return Direction.V
    return Direction.RD if theta < 0 else Direction.LD


def segment_angle(seg: Segment) -> float | None:
    """Orientation in degrees, or ``None`` for a near-isotropic loop."""
    pts = np.array(seg.pixels, dtype=float)
    if seg.kind == "path":
        dx, dy = pts[-1] - pts[0]
        return _fold(math.degrees(math.atan2(dy, dx)))
    d = pts - pts.mean(axis=0)
    mu20 = float(np.sum(d[:, 0] ** 2))
    mu02 = float(np.sum(d[:, 1] ** 2))
    mu11 = float(np.sum(d[:, 0] * d[:, 1]))
    lam = np.linalg.eigvalsh(np.array([[mu20, mu11], [mu11, mu02]]))
    if lam[0] > 0 and math.sqrt(lam[1] / lam[0]) < ISOTROPY_RATIO:
        return None
    return _fold(math.degrees(0.5 * math.atan2(2 * mu11, mu20 - mu02)))


def classify_direction(seg: Segment) -> Direction:
    theta = segment_angle(seg)
    return Direction.H if theta is None else bucket_angle(theta)


def line_segments(skel) -> list[Segment]:
    """Segments after turn splitting, each tagged with its direction."""
    out = []
    for seg in extract_segments(skel):
        for part in split_at_turns(seg):
            out.append(Segment(part.pixels, part.kind, classify_direction(part)))
    return out


def encode_count(n) -> float:
    """Map a line count onto [-1, 1] as ``1 - 2 n / 10``, clamped below."""
    if n < 0:
        raise ValueError("count must be nonnegative")
    return max(-1.0, 1.0 - 2.0 * (n / 10.0))


def normalized_length(line_pixels, zone_pixels) -> float:
    """Fraction of a zone's pixels covered by a line, capped at 1."""
    if zone_pixels <= 0:
        raise ValueError("zone must contain at least one pixel")
    return min(line_pixels, zone_pixels) / zone_pixels


def junction_clusters(skel) -> list[list[tuple[int, int]]]:
    """8-connected groups of junction pixels, one group per stroke crossing."""
    mask = _skeleton_mask(skel)
    junc = junction_mask(mask)
    labels, n = ndimage.label(junc, structure=EIGHT)
    groups = []
    for lab in range(1, n + 1):
        ys, xs = np.nonzero(labels == lab)
        groups.append(sorted(zip(xs.tolist(), ys.tolist()), key=lambda p: (p[1], p[0])))
    return groups


def count_intersections(skel, zone: Zone, clusters=None) -> int:
    """Stroke crossings whose topmost-leftmost junction pixel lies in ``zone``.

    Adjacent junction pixels (a '+' produces five of them) count once.
    """
    if clusters is None:
        clusters = junction_clusters(skel)
    return sum(1 for c in clusters if zone.contains(*c[0]))


class _LineStats:
    """Per-image segment/junction data shared across zones."""

    def __init__(self, skel):
        self.mask = _skeleton_mask(skel)
        self.segments = line_segments(self.mask)
        self.clusters = junction_clusters(self.mask)
        h, w = self.mask.shape
        self.class_maps = {d: np.zeros((h, w), dtype=np.int32) for d in DIRECTIONS}
        for seg in self.segments:
            cmap = self.class_maps[seg.direction]
            for x, y in seg.pixels:
                cmap[y, x] += 1

    def zone_features(self, zone: Zone, intersections: bool) -> list[float]:
        counts = {d: 0 for d in DIRECTIONS}
        for seg in self.segments:
            if zone.contains(*seg.anchor):
                counts[seg.direction] += 1
        feats = [encode_count(counts[d]) for d in DIRECTIONS]
        feats += [normalized_length(int(zone.view(self.class_maps[d]).sum()), zone.area)
                  for d in DIRECTIONS]
        feats.append(int(zone.view(self.mask).sum()) / zone.area)
        if intersections:
            feats.append(encode_count(count_intersections(self.mask, zone, self.clusters)))
        return feats


def global_features(binary) -> list[float]:
    """Centroid offset, second moment, object count and spread of the ink."""
    mask = np.asarray(binary, dtype=bool)
    if not mask.any():
        raise ValueError("global features need at least one foreground pixel")
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    n = len(xs)
    cx, cy = xs.mean(), ys.mean()
    offset = math.hypot(cx - (w - 1) / 2, cy - (h - 1) / 2) / (math.hypot(w, h) / 2)
    mu20 = float(np.sum((xs - cx) ** 2))
    mu02 = float(np.sum((ys - cy) ** 2))
    moment = (mu20 + mu02) / (n * (w * w + h * h))
    objects = int(ndimage.label(mask, structure=EIGHT)[1])
    return [offset, moment, encode_count(objects), n / (w * h)]


@dataclass(frozen=True)
class FeatureVector:
    extractor: str
    values: np.ndarray

    def __post_init__(self):
        want = DIMENSIONS.get(self.extractor)
        if want is None:
            raise ValueError(f"unknown extractor {self.extractor!r}")
        if len(self.values) != want:
            raise ValueError(f"{self.extractor} vector must have {want} values")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    def __len__(self):
        return len(self.values)


def _zone_block(stats: _LineStats, grid: ZoneGrid, intersections: bool) -> list[float]:
    out = []
    for zone in grid.zones:
        out += stats.zone_features(zone, intersections)
    return out


def _prepare(skel, binary):
    mask = _skeleton_mask(skel)
    binary = np.asarray(binary, dtype=bool)
    check_same_shape(mask, binary)
    return mask, binary


def extract_proposed(skel, binary) -> FeatureVector:
    mask, binary = _prepare(skel, binary)
    h, w = mask.shape
    stats = _LineStats(mask)
    values = _zone_block(stats, partition_zones(w, h, 3, 3), intersections=False)
    values += _zone_block(stats, partition_zones(w, h, 3, 1), intersections=True)
    values += _zone_block(stats, partition_zones(w, h, 1, 3), intersections=True)
    values += global_features(binary)
    return FeatureVector("proposed", np.array(values))


def extract_geometric(skel, binary) -> FeatureVector:
    mask, binary = _prepare(skel, binary)
    h, w = mask.shape
    values = _zone_block(_LineStats(mask), partition_zones(w, h, 3, 3), intersections=False)
    return FeatureVector("geometric", np.array(values))


def extract_hybrid(skel, binary) -> FeatureVector:
    mask, binary = _prepare(skel, binary)
    h, w = mask.shape
    values = _zone_block(_LineStats(mask), partition_zones(w, h, 3, 3), intersections=True)
    return FeatureVector("hybrid", np.array(values))


def sobel_gradients(gray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel derivatives along x and y with edge replication at the border."""
    g = np.asarray(gray, dtype=np.float64)
    gx = ndimage.sobel(g, axis=1, mode="nearest")
    gy = ndimage.sobel(g, axis=0, mode="nearest")
    return gx, gy


def orientation_bins(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """8 bins of 45 degrees, bin 0 centred on 0 degrees (x right, y down)."""
    theta = np.degrees(np.arctan2(gy, gx))
    return np.floor(theta / 45.0 + 0.5).astype(int) % GRADIENT_BINS


def extract_gradient(gray, binary) -> FeatureVector:
    """Magnitude-weighted orientation histograms per 3x3 zone, L2-normalised."""
    gray = np.asarray(gray)
    check_same_shape(gray, np.asarray(binary))
    h, w = gray.shape
    gx, gy = sobel_gradients(gray)
    mag = np.hypot(gx, gy)
    bins = orientation_bins(gx, gy)
    values = []
    for zone in partition_zones(w, h, 3, 3).zones:
        hist = np.bincount(zone.view(bins).ravel(), weights=zone.view(mag).ravel(),
                           minlength=GRADIENT_BINS)
        norm = np.linalg.norm(hist)
        values += list(hist / norm if norm > 0 else hist)
    return FeatureVector("gradient", np.array(values, dtype=float))


def extract(pre: Preprocessed, extractor: str) -> FeatureVector:
    """Run one named extractor on a preprocessed image."""
    if extractor == "proposed":
        return extract_proposed(pre.skeleton, pre.binary)
    if extractor == "geometric":
        return extract_geometric(pre.skeleton, pre.binary)
    if extractor == "hybrid":
        return extract_hybrid(pre.skeleton, pre.binary)
    if extractor == "gradient":
        return extract_gradient(pre.gray, pre.binary)
    raise ValueError(f"unknown extractor {extractor!r}; choose from {', '.join(EXTRACTORS)}")
