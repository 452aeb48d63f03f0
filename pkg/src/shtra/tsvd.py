"""Tensor SVD in the Fourier domain along mode 3.

All public functions take and return real arrays; complex arithmetic stays
inside this module. Frequency slices come in conjugate pairs for real
input, so only ``I3 // 2 + 1`` of them are decomposed and the rest are
mirrored. Self-conjugate slices (DC, and Nyquist for even ``I3``) are real
and get a real SVD, which keeps the mirrored spectrum exactly Hermitian.
"""

from dataclasses import dataclass

import numpy as np

IMAG_TOL = 1e-10


def _check3(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected a 3-order tensor, got shape {a.shape}")
    return a


def dft_mode3(a):
    """Unnormalised DFT along the third mode."""
    return np.fft.fft(_check3(a), axis=2)


def idft_mode3(a_bar):
    a_bar = np.asarray(a_bar)
    if a_bar.ndim != 3:
        raise ValueError(f"expected a 3-order tensor, got shape {a_bar.shape}")
    return np.fft.ifft(a_bar, axis=2)


def _half_count(size):
    # k = 1 .. ceil((I3 + 1) / 2) in 1-based numbering
    return size // 2 + 1


def _self_conjugate(k, size):
    return k == 0 or 2 * k == size


def _mirror(half, size):
    """Fill slices ``h .. I3-1`` from the first ``h`` by conjugate symmetry."""
    full = np.empty(half.shape[:2] + (size,), dtype=np.complex128)
    h = half.shape[2]
    full[:, :, :h] = half
    for k in range(h, size):
        full[:, :, k] = np.conj(full[:, :, size - k])
    return full


def _to_real(a, what):
    scale = max(1.0, float(np.max(np.abs(a.real), initial=0.0)))
    residue = float(np.max(np.abs(a.imag), initial=0.0))
    if residue > IMAG_TOL * scale:
        raise FloatingPointError(f"{what}: imaginary residue {residue:.3e} after inverse DFT")
    return np.ascontiguousarray(a.real)


@dataclass(frozen=True)
class TSvdTriple:
    """Factors of ``A = U * S * V^T`` (t-products)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def t_product(a, b):
    """t-product of real 3-order tensors: slicewise products in the Fourier domain."""
    a_bar = dft_mode3(a)
    b_bar = dft_mode3(b)
    c_bar = np.einsum("ijk,jlk->ilk", a_bar, b_bar)
    return _to_real(idft_mode3(c_bar), "t_product")


def t_transpose(a):
    """Tensor transpose: transpose each frontal slice and reverse slices 2..I3."""
    a = _check3(a)
    out = np.transpose(a, (1, 0, 2)).copy()
    out[:, :, 1:] = out[:, :, :0:-1]
    return out


def t_svd(a):
    """Full t-SVD with nonincreasing singular values in every frequency slice."""
    a = _check3(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("t_svd input contains non-finite values")
    n1, n2, n3 = a.shape
    a_bar = dft_mode3(a)
    h = _half_count(n3)
    u_half = np.empty((n1, n1, h), dtype=np.complex128)
    s_half = np.zeros((n1, n2, h), dtype=np.complex128)
    v_half = np.empty((n2, n2, h), dtype=np.complex128)
    m = min(n1, n2)
    for k in range(h):
        slab = a_bar[:, :, k]
        if _self_conjugate(k, n3):
            slab = slab.real
        uk, sk, vhk = np.linalg.svd(slab, full_matrices=True)
        u_half[:, :, k] = uk
        s_half[np.arange(m), np.arange(m), k] = sk
        v_half[:, :, k] = vhk.conj().T
    u = _to_real(idft_mode3(_mirror(u_half, n3)), "t_svd U")
    s = _to_real(idft_mode3(_mirror(s_half, n3)), "t_svd S")
    v = _to_real(idft_mode3(_mirror(v_half, n3)), "t_svd V")
    return TSvdTriple(u, s, v)


def frequency_singular_values(a):
    """Singular values of every frequency slice, shape ``(I3, min(I1, I2))``."""
    a_bar = dft_mode3(a)
    return np.linalg.svd(np.moveaxis(a_bar, 2, 0), compute_uv=False)


def tnn(a):
    """Tensor nuclear norm: sum of nuclear norms of all frequency slices (no 1/I3)."""
    return float(np.sum(frequency_singular_values(a)))


def tubal_rank(a, tol=None):
    """Number of singular tubes ``s(i, i, :)`` whose max magnitude exceeds ``tol``.

    The default tolerance is ``1e-8`` times the largest tube magnitude.
    """
    s = t_svd(a).s
    m = min(s.shape[0], s.shape[1])
    idx = np.arange(m)
    peaks = np.max(np.abs(s[idx, idx, :]), axis=1) if m else np.zeros(0)
    if peaks.size == 0 or peaks.max() == 0.0:
        return 0
    if tol is None:
        tol = 1e-8 * peaks.max()
    return int(np.count_nonzero(peaks > tol))


def _svt_slice(slab, tau):
    u, s, vh = np.linalg.svd(slab, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vh


def t_svt(l, tau):
    """Proximal operator of ``tau * tnn``.

    By Parseval ``||A||_F^2 = sum_k ||A_bar_k||_F^2 / I3``, so with the
    unnormalised TNN every frequency slice is soft-thresholded at
    ``tau * I3``. To threshold slices at a given level ``t`` pass
    ``tau = t / I3``. Only the first ``I3 // 2 + 1`` slices are decomposed;
    the remainder follow by conjugate symmetry.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    l = _check3(l)
    n3 = l.shape[2]
    level = tau * n3
    l_bar = dft_mode3(l)
    h = _half_count(n3)
    w_half = np.empty(l.shape[:2] + (h,), dtype=np.complex128)
    for k in range(h):
        slab = l_bar[:, :, k]
        if _self_conjugate(k, n3):
            slab = slab.real
        w_half[:, :, k] = _svt_slice(slab, level)
    return _to_real(idft_mode3(_mirror(w_half, n3)), "t_svt")


def sth(x, tau):
    """Soft threshold ``sgn(x) * max(|x| - tau, 0)``, elementwise."""
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)
