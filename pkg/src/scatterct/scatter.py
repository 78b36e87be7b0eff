"""Convolutional scatter model: kernel construction, K and K^T."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage, signal

__all__ = [
    "ScatterKernel",
    "gaussian_taps_1d",
    "make_paper_kernel",
    "identity_kernel",
    "zero_kernel",
    "convolve",
    "convolve_adjoint",
]

PAPER_SIGMA = 1.5
PAPER_WIDTH = 7
PAPER_PASSES = 3


@dataclass(frozen=True)
class ScatterKernel:
    """Square, odd-sized, nonnegative convolution kernel.

    ``separable`` optionally holds the 1D factor ``v`` with
    ``taps == outer(v, v)``; it only selects a faster, equivalent code path.
    """

    taps: np.ndarray = field(repr=False)
    description: str = ""
    separable: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise ValueError(f"kernel must be square with odd side, got {taps.shape}")
        if not np.all(np.isfinite(taps)) or np.any(taps < 0):
            raise ValueError("kernel taps must be finite and nonnegative")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        if self.separable is not None:
            v = np.asarray(self.separable, dtype=np.float64)
            if v.shape != (taps.shape[0],):
                raise ValueError("separable factor length must equal kernel side")
            v.setflags(write=False)
            object.__setattr__(self, "separable", v)

    @property
    def side(self) -> int:
        return self.taps.shape[0]

    @property
    def total(self) -> float:
        return float(self.taps.sum())


def gaussian_taps_1d(width: int = PAPER_WIDTH, sigma: float = PAPER_SIGMA) -> np.ndarray:
    """Unit-sum Gaussian sampled at integer offsets ``-(width//2) .. width//2``."""
    x = np.arange(width, dtype=np.float64) - width // 2
    g = np.exp(-(x**2) / (2.0 * sigma**2))
    return g / g.sum()


def make_paper_kernel(
    width: int = PAPER_WIDTH, sigma: float = PAPER_SIGMA, passes: int = PAPER_PASSES
) -> ScatterKernel:
    """Composite kernel: a ``width x width`` Gaussian blur applied ``passes`` times.

    With the defaults this is the 19 x 19 kernel ``g * g * g``.
    """
    g1 = gaussian_taps_1d(width, sigma)
    g2 = np.outer(g1, g1)
    taps = g2
    v = g1
    for _ in range(passes - 1):
        taps = signal.convolve2d(taps, g2, mode="full")
        v = np.convolve(v, g1, mode="full")
    return ScatterKernel(
        taps=taps,
        description=f"{passes}-fold {width}x{width} Gaussian blur, sigma={sigma} px",
        separable=v,
    )


def identity_kernel(side: int = 1) -> ScatterKernel:
    taps = np.zeros((side, side))
    taps[side // 2, side // 2] = 1.0
    return ScatterKernel(taps=taps, description="identity")


def zero_kernel(side: int = 1) -> ScatterKernel:
    return ScatterKernel(taps=np.zeros((side, side)), description="zero (no scatter)")


def _check(image: np.ndarray, kernel: ScatterKernel) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError(f"expected a square image, got shape {image.shape}")
    # reach beyond the image width means a misconfigured kernel
    if kernel.side // 2 > image.shape[0]:
        raise ValueError(
            f"kernel side {kernel.side} reaches past the image side {image.shape[0]}"
        )
    return image


def convolve(image: np.ndarray, kernel: ScatterKernel) -> np.ndarray:
    """Same-size linear convolution with zero padding outside the image."""
    image = _check(image, kernel)
    if kernel.separable is not None:
        v = kernel.separable
        out = ndimage.convolve1d(image, v, axis=0, mode="constant", cval=0.0)
        return ndimage.convolve1d(out, v, axis=1, mode="constant", cval=0.0)
    return ndimage.convolve(image, kernel.taps, mode="constant", cval=0.0)


def convolve_adjoint(image: np.ndarray, kernel: ScatterKernel) -> np.ndarray:
    """Transpose of :func:`convolve`: correlation with the kernel, zero padded."""
    image = _check(image, kernel)
    if kernel.separable is not None:
        v = kernel.separable
        out = ndimage.correlate1d(image, v, axis=0, mode="constant", cval=0.0)
        return ndimage.correlate1d(out, v, axis=1, mode="constant", cval=0.0)
    return ndimage.correlate(image, kernel.taps, mode="constant", cval=0.0)
