"""Weighted anisotropic finite differences with periodic boundaries.

Component ``d`` of :func:`apply_d` is ``w_d * (x(i) - x(i + e_d))`` with the
index wrapping around, so ``D*D`` is block circulant and the linear system
of the Z-update diagonalises under the N-dimensional DFT.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiffStack:
    """One difference tensor per mode; zero-weight modes hold ``None``."""

    components: tuple
    weights: tuple

    @property
    def shape(self):
        for c in self.components:
            if c is not None:
                return c.shape
        return None

    def _combine(self, other, fn):
        if self.weights != other.weights:
            raise ValueError("difference stacks have different weights")
        comps = tuple(
            None if a is None else fn(a, b) for a, b in zip(self.components, other.components)
        )
        return DiffStack(comps, self.weights)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        return self.map(lambda c: scalar * c)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.map(lambda c: c / scalar)

    def map(self, fn):
        return DiffStack(tuple(None if c is None else fn(c) for c in self.components), self.weights)

    def active(self):
        return [c for c in self.components if c is not None]

    def inner(self, other):
        if self.weights != other.weights:
            raise ValueError("difference stacks have different weights")
        return float(
            sum(np.vdot(a, b) for a, b in zip(self.components, other.components) if a is not None)
        )

    def l1_norm(self):
        return float(sum(np.abs(c).sum() for c in self.active()))

    def frobenius_norm(self):
        return float(np.sqrt(sum(np.vdot(c, c) for c in self.active())))


def _weights(w, ndim):
    w = tuple(float(v) for v in np.atleast_1d(w))
    if len(w) != ndim:
        raise ValueError(f"need {ndim} weights, got {len(w)}")
    if min(w) < 0:
        raise ValueError("weights must be nonnegative")
    return w


def zero_stack(shape, w):
    w = _weights(w, len(shape))
    return DiffStack(tuple(None if wd == 0 else np.zeros(shape) for wd in w), w)


def apply_d(x, w):
    """Weighted forward circular differences along every mode."""
    x = np.asarray(x, dtype=np.float64)
    w = _weights(w, x.ndim)
    comps = tuple(
        None if wd == 0 else wd * (x - np.roll(x, -1, axis=d)) for d, wd in enumerate(w)
    )
    return DiffStack(comps, w)


def apply_d_adjoint(y, shape=None):
    """Adjoint of :func:`apply_d`: weighted backward circular differences.

    ``shape`` is only needed when every weight is zero.
    """
    shape = y.shape if shape is None else tuple(shape)
    if shape is None:
        raise ValueError("all-zero weights: pass the tensor shape explicitly")
    if len(y.components) != len(shape):
        raise ValueError(f"stack has {len(y.components)} modes, tensor has {len(shape)}")
    out = np.zeros(shape)
    for d, (wd, c) in enumerate(zip(y.weights, y.components)):
        if c is None:
            continue
        if c.shape != shape:
            raise ValueError(f"component {d} has shape {c.shape}, expected {shape}")
        out += wd * (c - np.roll(c, 1, axis=d))
    return out


def dtd_spectrum(shape, w):
    """DFT eigenvalues of ``D*D``: ``sum_d w_d^2 (2 - 2 cos(2 pi k_d / I_d))``."""
    shape = tuple(int(s) for s in shape)
    w = _weights(w, len(shape))
    eig = np.zeros(shape)
    for d, (size, wd) in enumerate(zip(shape, w)):
        if wd == 0:
            continue
        k = np.arange(size)
        lam = wd**2 * (2.0 - 2.0 * np.cos(2.0 * np.pi * k / size))
        bshape = [1] * len(shape)
        bshape[d] = size
        eig = eig + lam.reshape(bshape)
    return eig


def solve_z(j, beta1, beta2, spectrum):
    """Solve ``(beta1 I + beta2 D*D) Z = J`` in the Fourier domain."""
    if beta1 <= 0:
        raise ValueError(f"beta1 must be positive, got {beta1}")
    if beta2 < 0:
        raise ValueError(f"beta2 must be nonnegative, got {beta2}")
    j = np.asarray(j, dtype=np.float64)
    if beta2 == 0:
        return j / beta1
    return np.fft.ifftn(np.fft.fftn(j) / (beta1 + beta2 * spectrum)).real
