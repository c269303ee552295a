"""
Reducing and quantizing region descriptors
==========================================

Region descriptors arrive as high-dimensional vectors (4096-d fc7
activations in the original setting). Before any coding they are reduced
with PCA, and a small k-means codebook is learned on the reduced vectors.
"""

import numpy as np

from spvlad import fit_pca, project, train_codebook

rng = np.random.default_rng(0)

# %%
# Fake "CNN features": 2000 regions in 512 dimensions whose variance is
# concentrated in a few directions, the way real activations are.
latent = rng.standard_normal((2000, 32)) * np.linspace(8, 0.5, 32)
mixing = np.linalg.qr(rng.standard_normal((512, 32)))[0].T
features = latent @ mixing + 0.05 * rng.standard_normal((2000, 512))

# %%
# Fit once at the largest dimension and truncate for smaller ones: the
# leading directions are the same either way.
pca = fit_pca(features, 128)
for d in (16, 32, 64, 128):
    m = pca.truncate(d)
    err = np.mean((m.reconstruct(project(m, features)) - features) ** 2)
    print(f"d={d:4d}  reconstruction MSE {err:.5f}")

# %%
# Basis rows are orthonormal and sign-normalized, so repeated fits agree.
print("max |B B^T - I| =", np.abs(pca.basis @ pca.basis.T - np.eye(128)).max())

# %%
# k-means++ seeding followed by Lloyd iterations. The inertia trace never
# goes up.
Z = project(pca.truncate(32), features)
for k in (1, 2, 4, 8, 64):
    cb = train_codebook(Z, k, seed=0)
    print(f"K={k:3d}  inertia {cb.inertia:12.1f}  iterations {cb.n_iter:3d}")
print("K=64 inertia trace (first 5):", [round(v, 1) for v in cb.trace[:5]])
