"""Deterministic synthetic data for experiments and tests."""

import numpy as np

from .rng import SplitMix64
from .tensor import frobenius_norm
from .tr import random_chain, tr_reconstruct


def tr_tensor(dims, ranks, seed):
    """Unit-Frobenius-norm tensor with exact TR ranks ``ranks``."""
    full = tr_reconstruct(random_chain(dims, ranks, seed))
    return full / frobenius_norm(full)


def smooth_image(height=64, width=64, kmax=3, seed=2024):
    """Color image (0..255) made of low-frequency cosines.

    Every channel sums ``cos(2 pi (kx i / H + ky j / W) + phase)`` over all
    frequency pairs with ``|kx|, |ky| <= kmax`` (one of each +/- pair), with
    random amplitude scaled by ``1 / (1 + kx^2 + ky^2)``. The result is
    rescaled to span exactly 0..255.
    """
    rng = SplitMix64(seed)
    i, j = np.meshgrid(np.arange(height) / height, np.arange(width) / width, indexing="ij")
    out = np.zeros((height, width, 3))
    for c in range(3):
        for kx in range(kmax + 1):
            for ky in range(-kmax, kmax + 1):
                if kx == 0 and ky <= 0:
                    continue
                amp, phase = rng.uniform_block(2)
                out[:, :, c] += amp / (1 + kx * kx + ky * ky) * np.cos(
                    2 * np.pi * (kx * i + ky * j) + 2 * np.pi * phase
                )
    out -= out.min()
    return 255.0 * out / out.max()
