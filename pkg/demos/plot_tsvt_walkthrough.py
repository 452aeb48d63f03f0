"""
t-SVD, tubal rank and singular value thresholding
=================================================

A low-tubal-rank tensor is built from t-products, perturbed with noise,
and cleaned with the t-SVT proximal operator.
"""

import numpy as np

from shtra.tensor import frobenius_norm
from shtra.tsvd import frequency_singular_values, t_product, t_svd, t_svt, t_transpose, tnn, tubal_rank

rng = np.random.default_rng(0)

###############################################################################
# ``A = U * S * V^T`` with only two nonzero singular tubes.

u = t_svd(rng.standard_normal((10, 10, 6))).u[:, :2, :]
v = t_svd(rng.standard_normal((8, 8, 6))).v[:, :2, :]
s = np.zeros((2, 2, 6))
s[0, 0, 0], s[1, 1, 0] = 6.0, 3.0
clean = t_product(t_product(u, s), t_transpose(v))
print("tubal rank of the clean tensor:", tubal_rank(clean))
print("TNN:", round(tnn(clean), 4))

###############################################################################
# Noise fills every tube. Thresholding the frequency singular values
# removes the small ones. The slice level below sits just above the
# noise floor in the Fourier domain; ``t_svt`` takes it divided by I3.

noisy = clean + 0.05 * rng.standard_normal(clean.shape)
print("tubal rank with noise:", tubal_rank(noisy))
sv = frequency_singular_values(noisy)
print("frequency singular values, first slice:", np.round(sv[0], 3))

tau = 0.6 / noisy.shape[2]
denoised = t_svt(noisy, tau)
# soft thresholding also shrinks the kept values by the same level,
# which eats into the gain
print("tubal rank after t-SVT:", tubal_rank(denoised, tol=1e-6))
print(f"error before {frobenius_norm(noisy - clean):.4f}, after {frobenius_norm(denoised - clean):.4f}")
