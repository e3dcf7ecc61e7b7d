"""
From a glyph image to a cropped skeleton
========================================

Renders a synthetic letter, picks an Otsu threshold, thins the ink to a
one-pixel skeleton and crops it to its bounding box.
"""

import numpy as np

from hcrkit.imaging import GlyphGenConfig, generate_glyphs
from hcrkit.preprocess import binarize, otsu_threshold, preprocess


def show(mask, ink="#", paper="."):
    for row in mask:
        print("".join(ink if v else paper for v in row))


# one clean 'R' on a 32x32 canvas, dark ink on white
img = generate_glyphs(GlyphGenConfig(stroke_width=3), "R").samples[0][0]
print("gray levels present:", np.unique(img))

# Otsu picks the threshold; dark pixels at or below it are ink
t = otsu_threshold(img)
print("threshold:", t)
show(binarize(img, t))

# the full pipeline returns skeleton, binary mask and gray crop on one box
pre = preprocess(img)
print("\nbox (x0, y0, x1, y1):", tuple(pre.box))
print("skeleton junctions:", sorted(pre.skeleton.junctions))
print("skeleton endpoints:", sorted(pre.skeleton.endpoints))
show(pre.skeleton.image)
