"""
Geometry augmentation instead of a pyramid
==========================================

The alternative to explicit cells: append the region's relative center and
relative log-scale to each reduced descriptor (d + 3 values), learn the
codebook on those, and VLAD-code the whole image once.
"""

import numpy as np

from spvlad import (
    ImageRecord,
    RegionDescriptor,
    augment,
    concat_global,
    encode_augmented,
    encode_pyramid,
    PcaModel,
    PyramidSpec,
    train_codebook,
)
from spvlad.encoder import augmented_descriptors

# %%
# The appended triple for a few boxes in a 100x100 image. The full frame
# maps to exactly (0, 0, 0).
for box in [(0, 0, 100, 100), (0, 50, 50, 50), (90, 0, 10, 10)]:
    a = augment(RegionDescriptor(*box, [0.0]), [0.0], 100, 100)
    print(box, "->", (round(a.rel_x, 4), round(a.rel_y, 4), round(a.log_scale, 4)))

# %%
# With d = 256 and K = 4 the augmented encoding has (256 + 3) * 4 = 1036
# values.
rng = np.random.default_rng(2)
n = 200
w, h = rng.uniform(10, 300, n), rng.uniform(10, 200, n)
boxes = np.column_stack([rng.uniform(0, 1, n) * (640 - w), rng.uniform(0, 1, n) * (480 - h), w, h])
rec = ImageRecord.from_arrays("aug", 640, 480, boxes, rng.standard_normal((n, 256)))
pca = PcaModel(np.zeros(256), np.eye(256))
cb_aug = train_codebook(augmented_descriptors(pca, rec), 4, seed=0)
print("augmented encoding:", encode_augmented(pca, cb_aug, rec).vector.size, "dims")

# %%
# Combining a level-2 pyramid (5120 values) with a 4096-d whole-image
# descriptor gives 9216 values.
cb = train_codebook(pca.project(rec.features()), 4, seed=0)
pyramid = encode_pyramid(pca, cb, rec, PyramidSpec(2))
print("pyramid + global:", concat_global(pyramid, rng.standard_normal(4096)).size, "dims")
