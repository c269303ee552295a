"""
Calibrating the benchmark noise level
=====================================

The synthetic benchmark has four scene classes that share the same main
object and the same secondary object; only the cell holding the secondary
object differs. Whole-image VLAD (level 1) should sit near chance (0.25)
at every noise level, and the 2x2 pyramid (level 2) should stay well above
it until the noise drowns the secondary object.

This sweep was run once to fix ``CALIBRATED_NOISE`` in
``spvlad.synthbench``. Run it with::

    python demos/calibrate_noise.py
"""

import numpy as np

from spvlad.synthbench import BenchConfig, run_benchmark

SEEDS = range(10)
NOISES = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]

# %%
# Sweep noise for the default encoder (K=1, d=16) and for K=4.
# With K=4 on a world of only two prototypes, each codeword sits on a
# cluster mean and a cell's residual sum is mostly noise, which caps
# level 2 at roughly 0.5.

for k in (1, 4):
    print(f"K={k}")
    print(f"{'noise':>6} {'level1 mean':>12} {'level2 mean':>12} {'level2 min':>11} {'min margin':>11}")
    for noise in NOISES:
        acc = [run_benchmark(BenchConfig(noise=noise, n_words=k), s).accuracy for s in SEEDS]
        l1 = np.array([a["level1"] for a in acc])
        l2 = np.array([a["level2"] for a in acc])
        print(f"{noise:6.2f} {l1.mean():12.3f} {l2.mean():12.3f} {l2.min():11.3f} {np.min(l2 - l1):11.3f}")
    print()

# %%
# The chosen level is the largest swept noise where level 2 still reaches at
# least 0.9 on every seed, so the acceptance margin is comfortable rather
# than tuned to the edge.
