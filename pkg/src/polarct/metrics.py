"""Image quality measures.

3D volumes are scored slice by slice along the first axis and averaged.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InputError

WINDOW = 8
K1, K2 = 0.01, 0.03


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"image shapes differ: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InputError("images contain non-finite values")
    return a, b


def mae(ref, test) -> float:
    a, b = _pair(ref, test)
    return float(np.mean(np.abs(a - b)))


def rmse(ref, test) -> float:
    a, b = _pair(ref, test)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def area_average(image) -> float:
    return float(np.mean(np.asarray(image, dtype=np.float64)))


def _ssim_2d(a: np.ndarray, b: np.ndarray, L: float, win: int) -> float:
    c1 = (K1 * L) ** 2
    c2 = (K2 * L) ** 2
    wa = sliding_window_view(a, (win, win))
    wb = sliding_window_view(b, (win, win))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa ** 2).mean(axis=(-2, -1)) - mu_a ** 2
    var_b = (wb ** 2).mean(axis=(-2, -1)) - mu_b ** 2
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(ref, test, data_range: float | None = None, window: int = WINDOW) -> float:
    """Mean SSIM over all ``window x window`` windows at stride 1.

    Uses uniform window weights and population moments.  ``data_range``
    defaults to the reference's max minus min.
    """
    a, b = _pair(ref, test)
    if a.ndim not in (2, 3):
        raise InputError("ssim expects a 2D image or a stack of 2D slices")
    if a.shape[-1] < window or a.shape[-2] < window:
        raise InputError(f"window {window} larger than image {a.shape[-2:]}")
    L = float(np.max(a) - np.min(a)) if data_range is None else float(data_range)
    if L <= 0.0:
        L = 1.0
    if a.ndim == 2:
        return _ssim_2d(a, b, L, window)
    return float(np.mean([_ssim_2d(sa, sb, L, window) for sa, sb in zip(a, b)]))


def sharpness(image) -> float:
    """Mean gradient magnitude from central differences (one-sided at the borders)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3:
        return float(np.mean([sharpness(s) for s in img]))
    if img.ndim != 2 or min(img.shape) < 2:
        raise InputError("sharpness needs an image of at least 2x2")
    gy, gx = np.gradient(img)
    return float(np.mean(np.hypot(gx, gy)))


def intensity_profile(image, row: int) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 2:
        raise InputError("profile expects a 2D image")
    if not 0 <= row < img.shape[0]:
        raise InputError(f"row {row} outside 0..{img.shape[0] - 1}")
    return img[row].copy()


def report(ref, test, data_range: float | None = None) -> dict:
    """All scalar measures for a reference/test pair."""
    return {
        "mae": mae(ref, test),
        "rmse": rmse(ref, test),
        "ssim": ssim(ref, test, data_range),
        "area_average_ref": area_average(ref),
        "area_average_test": area_average(test),
        "sharpness_ref": sharpness(ref),
        "sharpness_test": sharpness(test),
    }
