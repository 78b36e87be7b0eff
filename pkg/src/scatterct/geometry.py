"""Radial lineout <-> rotationally symmetric image maps.

A lineout of length ``N`` is "spun" onto a ``(2N-1, 2N-1)`` grid whose
center pixel sits at index ``N-1``. Each pixel at radius ``r`` receives the
linear interpolation of the lineout at ``r``; pixels with ``r > N-1`` are 0.
The map is stored as a sparse matrix so that the adjoint is its transpose.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

__all__ = [
    "image_side",
    "profile_length",
    "spin",
    "spin_adjoint",
    "unspin",
    "center_lineout",
    "spin_matrix",
    "pixel_radii",
]


def image_side(n: int) -> int:
    return 2 * n - 1


def profile_length(image: np.ndarray) -> int:
    """Lineout length ``N`` matching a spun image, validating its shape."""
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError(f"expected a square 2D image, got shape {image.shape}")
    side = image.shape[0]
    if side % 2 == 0 or side < 3:
        raise ValueError(f"image side must be odd and >= 3, got {side}")
    return (side + 1) // 2


def pixel_radii(n: int) -> np.ndarray:
    """Distance of every pixel of the spun grid from the center pixel."""
    offsets = np.arange(image_side(n), dtype=np.float64) - (n - 1)
    return np.sqrt(offsets[:, None] ** 2 + offsets[None, :] ** 2)


@lru_cache(maxsize=16)
def spin_matrix(n: int) -> sp.csr_matrix:
    """Sparse ``(side*side, n)`` interpolation matrix realizing :func:`spin`."""
    if n < 2:
        raise ValueError(f"lineout length must be >= 2, got {n}")
    r = pixel_radii(n).ravel()
    pix = np.flatnonzero(r <= n - 1)
    r = r[pix]
    lo = np.floor(r).astype(np.int64)
    w = r - lo
    hi = np.minimum(lo + 1, n - 1)
    rows = np.concatenate([pix, pix])
    cols = np.concatenate([lo, hi])
    vals = np.concatenate([1.0 - w, w])
    side = image_side(n)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(side * side, n)).tocsr()
    mat.sum_duplicates()
    return mat


def spin(lineout: np.ndarray) -> np.ndarray:
    """Spin a 1D radial lineout into a 2D rotationally symmetric image."""
    lineout = np.asarray(lineout, dtype=np.float64)
    if lineout.ndim != 1 or lineout.size < 2:
        raise ValueError("lineout must be 1D with length >= 2")
    n = lineout.size
    side = image_side(n)
    return (spin_matrix(n) @ lineout).reshape(side, side)


def spin_adjoint(image: np.ndarray) -> np.ndarray:
    """Transpose of :func:`spin`: scatter pixel values back onto radius bins."""
    n = profile_length(image)
    return spin_matrix(n).T @ np.asarray(image, dtype=np.float64).ravel()


@lru_cache(maxsize=16)
def _bin_weights(n: int) -> np.ndarray:
    return np.asarray(spin_matrix(n).sum(axis=0)).ravel()


def unspin(image: np.ndarray) -> np.ndarray:
    """Radial average of an image, using the spin interpolation weights.

    Bins that receive no weight come back as 0.
    """
    n = profile_length(image)
    num = spin_adjoint(image)
    den = _bin_weights(n)
    out = np.zeros(n)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def center_lineout(image: np.ndarray) -> np.ndarray:
    """Right half of the center row (radius 0 .. N-1)."""
    n = profile_length(image)
    return np.array(image[n - 1, n - 1 :], dtype=np.float64)
