"""
Effect of the smoothness term
=============================

Same image, same masks, same initial cores: once with the TV trade-off
at 3e-4 and once without it. The gain varies from mask to mask, so
several draws are averaged.
"""

from dataclasses import replace

import numpy as np

from shtra import SolverConfig, make_mask, psnr, solve
from shtra.synthetic import smooth_image

img = smooth_image(64, 64)
t = img / 255.0

gains = []
for mask_seed, init_seed in [(11, 5), (1, 1), (2, 3), (42, 7)]:
    mask = make_mask(t.shape, 0.2, mask_seed)
    config = SolverConfig(tr_ranks=8, seed=init_seed)
    with_tv = psnr(img, 255.0 * solve(t, mask, config).x)
    without = psnr(img, 255.0 * solve(t, mask, replace(config, lam=0.0)).x)
    gains.append(with_tv - without)
    print(f"mask {mask_seed:2d}: lambda=3e-4 {with_tv:6.2f} dB   lambda=0 {without:6.2f} dB")

print(f"mean gain {np.mean(gains):.2f} dB")

###############################################################################
# A small sweep over the trade-off on one mask.

mask = make_mask(t.shape, 0.2, 11)
for lam in (0.0, 1e-4, 3e-4, 1e-3, 3e-3):
    x = solve(t, mask, SolverConfig(tr_ranks=8, seed=5, lam=lam)).x
    print(f"lambda {lam:7.0e}: {psnr(img, 255.0 * x):6.2f} dB")
