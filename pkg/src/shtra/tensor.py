"""Dense tensor algebra in column-major (first index fastest) convention.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. Every reshape
here uses ``order="F"`` so that unfoldings agree with MATLAB ``reshape`` and
with the TNS1 on-disk layout. Mode indices are 0-based in code.
"""

from dataclasses import dataclass

import numpy as np

from .rng import SplitMix64


def as_tensor(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 0:
        raise ValueError("tensor must have at least one mode")
    return a


def _check_mode(a, n):
    if not 0 <= n < a.ndim:
        raise IndexError(f"mode {n} out of range for order-{a.ndim} tensor")


def inner_product(a, b):
    """Sum of the elementwise product of two tensors of identical shape."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(order="F"), b.ravel(order="F")))


def frobenius_norm(a):
    return float(np.sqrt(inner_product(a, a)))


def unfold_standard(a, n):
    """Mode-n unfolding ``A_(n)``; columns enumerate the other modes in order."""
    a = np.asarray(a)
    _check_mode(a, n)
    return np.moveaxis(a, n, 0).reshape(a.shape[n], -1, order="F")


def fold_standard(mat, n, shape):
    shape = tuple(shape)
    rest = shape[:n] + shape[n + 1:]
    return np.moveaxis(np.reshape(mat, (shape[n],) + rest, order="F"), 0, n)


def _circular_axes(ndim, n):
    return [(n + k) % ndim for k in range(ndim)]


def unfold_circular(a, n):
    """Mode-n unfolding ``A_<n>`` used by tensor rings.

    Columns enumerate the remaining modes in circular order
    n+1, ..., N, 1, ..., n-1 with the first of them varying fastest.
    """
    a = np.asarray(a)
    _check_mode(a, n)
    return np.transpose(a, _circular_axes(a.ndim, n)).reshape(a.shape[n], -1, order="F")


def fold_circular(mat, n, shape):
    shape = tuple(shape)
    axes = _circular_axes(len(shape), n)
    permuted = np.reshape(mat, [shape[k] for k in axes], order="F")
    return np.transpose(permuted, np.argsort(axes))


def permute_circular(a, k):
    """k-th circular tensor permutation: dims become [I_k, ..., I_N, I_1, ..., I_{k-1}]."""
    a = np.asarray(a)
    _check_mode(a, k)
    return np.transpose(a, _circular_axes(a.ndim, k))


@dataclass(frozen=True)
class ObservationMask:
    """Boolean tensor of observed entries with its sampling provenance."""

    observed: np.ndarray
    sampling_ratio: float = float("nan")
    seed: int | None = None

    @property
    def shape(self):
        return self.observed.shape

    @property
    def count(self):
        return int(np.count_nonzero(self.observed))

    def project(self, a):
        """Zero out unobserved entries (the P_O operator)."""
        return np.where(self.observed, a, 0.0)


def make_mask(shape, sampling_ratio, seed):
    """Uniformly random mask with exactly ``round(SR * prod(shape))`` entries.

    Selection is a partial Fisher-Yates shuffle of column-major linear
    indices driven by SplitMix64, so the result is fixed by ``seed`` alone.
    The draw ``j = i + r mod (n - i)`` carries the usual (negligible)
    modulo bias.
    """
    if not 0.0 <= sampling_ratio <= 1.0:
        raise ValueError(f"sampling ratio must lie in [0, 1], got {sampling_ratio}")
    shape = tuple(int(s) for s in shape)
    total = int(np.prod(shape))
    count = int(np.floor(sampling_ratio * total + 0.5))
    perm = np.arange(total, dtype=np.int64)
    if count:
        rng = SplitMix64(seed)
        draws = rng.uint64_block(count)
        spans = np.uint64(total) - np.arange(count, dtype=np.uint64)
        offsets = (draws % spans).astype(np.int64)
        for i, off in enumerate(offsets.tolist()):
            j = i + off
            perm[i], perm[j] = perm[j], perm[i]
    flat = np.zeros(total, dtype=bool)
    flat[perm[:count]] = True
    return ObservationMask(flat.reshape(shape, order="F"), float(sampling_ratio), int(seed))
