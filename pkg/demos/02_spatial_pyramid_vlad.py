"""
Spatial-pyramid VLAD
====================

One image, a few hundred region proposals. Each cell of the pyramid
(1x1; 2x2; left/middle/right thirds) collects the regions whose center
falls inside it and gets its own VLAD vector.
"""

import numpy as np

from spvlad import (
    ImageRecord,
    PyramidSpec,
    encode_pyramid,
    fit_pca,
    project,
    pyramid_raw,
    train_codebook,
)

rng = np.random.default_rng(1)
W, H, D, N = 640, 480, 300, 385

# %%
# Random proposals inside a 640x480 frame, plus the full frame itself.
w = rng.uniform(20, W, N - 1)
h = rng.uniform(20, H, N - 1)
boxes = np.column_stack([rng.uniform(0, 1, N - 1) * (W - w), rng.uniform(0, 1, N - 1) * (H - h), w, h])
boxes = np.vstack([[0, 0, W, H], boxes])
rec = ImageRecord.from_arrays("demo", W, H, boxes, rng.standard_normal((N, D)))

pca = fit_pca(rec.features(), 256)
cb = train_codebook(project(pca, rec.features()), 4, seed=0)

# %%
# Dimensions follow cells x K x d.
for level in (1, 2, 3):
    enc = encode_pyramid(pca, cb, rec, PyramidSpec(level))
    print(f"level {level}: {PyramidSpec(level).n_cells} cells -> {enc.vector.size} dims")

# %%
# Every region lands in exactly one cell per level, so the unnormalized
# cell vectors of a level add back up to the whole-image vector.
cells = pyramid_raw(pca, cb, rec, PyramidSpec(3))
whole = cells[0][1]
for name, group in (("2x2", cells[1:5]), ("3x1", cells[5:8])):
    total = sum(raw for _, raw, _ in group)
    counts = [n for _, _, n in group]
    print(f"{name}: region counts {counts}, max |sum - whole| = {np.abs(total - whole).max():.2e}")

# %%
# After signed square root and L2, each cell slice has unit norm (or is
# zero when a cell is empty).
enc = encode_pyramid(pca, cb, rec, PyramidSpec(3))
for (level, idx, off, n), norm, count in zip(enc.layout, enc.cell_norms(), enc.cell_counts):
    print(f"level {level} cell {idx}: offset {off:5d} regions {count:3d} norm {norm:.3f}")
