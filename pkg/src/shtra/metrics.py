"""Recovery quality measures: PSNR, SSIM, RSE, SAM and band averages.

PSNR of identical inputs is reported as ``math.inf``. SSIM is the standard
single-scale index (11x11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03)
averaged over all fully contained window positions.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

CSV_FIELDS = ("psnr", "mpsnr", "ssim", "mssim", "rse", "sam", "peak")


def _pair(ref, est):
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {est.shape}")
    return ref, est


def psnr(ref, est, peak=255.0):
    """``10 log10(peak^2 / MSE)`` with the MSE taken over every entry."""
    ref, est = _pair(ref, est)
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = np.sum((est - ref) ** 2) / ref.size
    if mse == 0:
        return math.inf
    return float(10.0 * np.log10(peak**2 / mse))


def rse(ref, est):
    """``||ref - est||_F / ||est||_F``.

    Note the normalisation by the *estimate*, not the reference.
    """
    ref, est = _pair(ref, est)
    denom = np.linalg.norm(est.ravel())
    if denom == 0:
        raise ZeroDivisionError("relative error undefined for an all-zero estimate")
    return float(np.linalg.norm((ref - est).ravel()) / denom)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    """Normalised 1-D Gaussian taps; the 2-D window is their outer product."""
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(img, taps):
    rows = sliding_window_view(img, len(taps), axis=0) @ taps
    return sliding_window_view(rows, len(taps), axis=1) @ taps


def ssim(ref, est, peak=255.0):
    """Single-scale SSIM of two 2-D bands.

    Bands smaller than the window fall back to one global window with
    uniform weights, and a ``RuntimeWarning`` is emitted.
    """
    ref, est = _pair(ref, est)
    if ref.ndim != 2:
        raise ValueError(f"ssim expects 2-D bands, got shape {ref.shape}")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    if min(ref.shape) < SSIM_WINDOW:
        warnings.warn("band smaller than SSIM window, using global statistics", RuntimeWarning)
        mu1, mu2 = ref.mean(), est.mean()
        s11 = (ref * ref).mean() - mu1 * mu1
        s22 = (est * est).mean() - mu2 * mu2
        s12 = (ref * est).mean() - mu1 * mu2
    else:
        taps = gaussian_window()
        mu1 = _filter_valid(ref, taps)
        mu2 = _filter_valid(est, taps)
        s11 = _filter_valid(ref * ref, taps) - mu1 * mu1
        s22 = _filter_valid(est * est, taps) - mu2 * mu2
        s12 = _filter_valid(ref * est, taps) - mu1 * mu2
    num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)
    den = (mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2)
    return float(np.mean(num / den))


def _bands(ref, est):
    ref, est = _pair(ref, est)
    if ref.ndim != 3:
        raise ValueError(f"expected a 3-order tensor, got shape {ref.shape}")
    return ref, est


def mssim(ref, est, peak=255.0):
    ref, est = _bands(ref, est)
    return float(np.mean([ssim(ref[:, :, k], est[:, :, k], peak) for k in range(ref.shape[2])]))


def mpsnr(ref, est, peak=255.0):
    """Mean per-band PSNR; bands with zero error are left out of the mean."""
    ref, est = _bands(ref, est)
    values = [psnr(ref[:, :, k], est[:, :, k], peak) for k in range(ref.shape[2])]
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return math.inf
    return float(np.mean(finite))


def _spectral_angles(ref, est):
    """Per-pixel angles and the mask of pixels with a zero spectrum.

    Uses ``2 atan2(||a - b||, ||a + b||)`` on the unit spectra, which equals
    the arccos of the clipped cosine but stays accurate for tiny angles.
    """
    ref, est = _bands(ref, est)
    a = ref.reshape(-1, ref.shape[2], order="F")
    b = est.reshape(-1, est.shape[2], order="F")
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    zero = (na[:, 0] == 0) | (nb[:, 0] == 0)
    ua = np.divide(a, na, out=np.zeros_like(a), where=na > 0)
    ub = np.divide(b, nb, out=np.zeros_like(b), where=nb > 0)
    angles = 2.0 * np.arctan2(np.linalg.norm(ua - ub, axis=1), np.linalg.norm(ua + ub, axis=1))
    angles[zero] = 0.0
    return angles, zero


def sam(ref, est):
    """Mean spectral angle in radians over all spatial positions.

    A pixel whose spectrum is zero in either tensor counts as angle 0.
    """
    angles, _ = _spectral_angles(ref, est)
    return float(np.mean(angles))


@dataclass
class MetricReport:
    psnr: float
    mpsnr: float
    ssim: float
    mssim: float
    rse: float
    sam: float
    peak: float
    flags: list = field(default_factory=list)

    def csv_row(self):
        return ",".join(repr(float(getattr(self, name))) for name in CSV_FIELDS)

    @classmethod
    def from_csv_row(cls, row):
        values = [float(v) for v in row.strip().split(",")]
        return cls(**dict(zip(CSV_FIELDS, values)))


def evaluate(ref, est, peak=255.0):
    """All metrics for 2-D or 3-order data; band metrics need 3 modes."""
    ref, est = _pair(ref, est)
    flags = []
    nan = float("nan")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if ref.ndim == 3:
            band_psnr = [psnr(ref[:, :, k], est[:, :, k], peak) for k in range(ref.shape[2])]
            if any(math.isinf(v) for v in band_psnr):
                flags.append("mpsnr: exact bands excluded")
            mp = mpsnr(ref, est, peak)
            ms = mssim(ref, est, peak)
            ss = ms
            _, zero = _spectral_angles(ref, est)
            if zero.any():
                flags.append(f"sam: {int(zero.sum())} zero-spectrum pixels counted as 0")
            sa = sam(ref, est)
        elif ref.ndim == 2:
            mp, ss, sa = nan, ssim(ref, est, peak), nan
            ms = ss
        else:
            mp = ss = ms = sa = nan
    if caught:
        flags.append("ssim: global statistics fallback")
    return MetricReport(psnr(ref, est, peak), mp, ss, ms, rse(ref, est), sa, float(peak), flags)
