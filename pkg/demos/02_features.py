"""
Zone features of a skeleton
===========================

Walks through the line segments found in a skeleton, their direction
classes and the four feature vectors computed from one preprocessed glyph.
"""

import numpy as np

from hcrkit.features import DIMENSIONS, EXTRACTORS, extract, line_segments, partition_zones
from hcrkit.imaging import GlyphGenConfig, generate_glyphs
from hcrkit.preprocess import preprocess

pre = preprocess(generate_glyphs(GlyphGenConfig(), "K").samples[0][0])
h, w = pre.skeleton.shape
print(f"cropped skeleton: {w}x{h}")

# segments are junction-free strokes; sharp turns split them further
for seg in line_segments(pre.skeleton):
    (x0, y0), (x1, y1) = seg.pixels[0], seg.pixels[-1]
    print(f"{seg.kind:4s} {seg.direction.value:2s} {len(seg):3d} px  ({x0},{y0}) -> ({x1},{y1})")

# 3x3 zoning: widths and heights differ by at most one pixel
for z in partition_zones(w, h, 3, 3).zones:
    print(z)

# one vector per extractor
for name in EXTRACTORS:
    fv = extract(pre, name)
    assert len(fv) == DIMENSIONS[name]
    print(f"{name:9s} {len(fv):3d} values, range [{fv.values.min():.2f}, {fv.values.max():.2f}]")

# the first zone's nine line features: 4 counts, 4 lengths, skeleton area
np.set_printoptions(precision=3, suppress=True)
print(extract(pre, "proposed").values[:9])
