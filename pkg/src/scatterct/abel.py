"""Forward Abel transform by the Hansen-Law recursion.

Grid convention: profile index ``k`` is radius ``k`` pixels and output index
``i`` is lateral offset ``i`` pixels (``dr = 1``). The source is treated as
piecewise linear between samples (first-order hold), following

    E. W. Hansen, "Fast Hankel transform algorithm",
    IEEE Trans. ASSP 33, 666 (1985),

with the nine-term state-space approximation of Hansen & Law (1985).
The recursion runs inward from the outer edge and cannot evaluate the
offset-0 chord, where the Abel kernel reduces to 1; that entry is the exact
integral of the piecewise-linear source instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = ["AbelOperator", "abel_forward", "abel_matrix", "abel_adjoint"]

# Hansen & Law, Table 1
_H = np.array([0.318, 0.19, 0.35, 0.82, 1.8, 3.9, 8.3, 19.6, 48.3])
_LAM = np.array([0.0, -2.1, -6.2, -22.4, -92.5, -414.5, -1889.4, -8990.9, -47391.1])


def _phi(n: float, lam: np.ndarray) -> np.ndarray:
    return (n / (n - 1.0)) ** lam


def _integral(n: float, pwr: int) -> np.ndarray:
    # integral of (eps/r)^(lam + pwr) over one pixel, times 2
    p1 = pwr + 1
    lp = _LAM + p1
    return 2.0 * (n - 1.0) ** p1 * (1.0 - _phi(n, lp)) / lp


@lru_cache(maxsize=8)
def _recursion_coefficients(n_max: int):
    """Per-step (phi, beta0, beta1) arrays for n = n_max-1 .. 2."""
    steps = []
    gain = -np.pi * _H
    for n in range(n_max - 1, 1, -1):
        i0 = _integral(n, 0)
        i1 = _integral(n, 1)
        beta0 = (i1 - (n - 1) * i0) * gain
        beta1 = (n * i0 - i1) * gain
        steps.append((n, _phi(n, _LAM), beta0, beta1))
    return tuple(steps)


def abel_forward(profile: np.ndarray) -> np.ndarray:
    """Areal-density lineout of a radial density profile.

    Parameters
    ----------
    profile : (N,) or (B, N) array
        Density at radius 0..N-1 pixels. A 2D input is transformed row-wise.

    Returns
    -------
    ndarray, same shape
        ``a[i] ~ 2 * int_i^{N-1} rho(r) r / sqrt(r^2 - i^2) dr``.
    """
    f = np.asarray(profile, dtype=np.float64)
    if f.shape[-1] < 2:
        raise ValueError(f"profile length must be >= 2, got {f.shape[-1]}")
    if not np.all(np.isfinite(f)):
        raise ValueError("profile contains non-finite values")
    squeeze = f.ndim == 1
    f = np.atleast_2d(f)
    rows, n_pts = f.shape
    out = np.zeros_like(f)
    state = np.zeros((rows, _H.size))
    for n, phi, beta0, beta1 in _recursion_coefficients(n_pts):
        state = phi * state + np.outer(f[:, n], beta0) + np.outer(f[:, n - 1], beta1)
        out[:, n - 1] = state.sum(axis=1)
    # offset 0: chord through the center, kernel == 1
    out[:, 0] = 2.0 * (f.sum(axis=1) - 0.5 * f[:, 0] - 0.5 * f[:, -1])
    return out[0] if squeeze else out


@dataclass(frozen=True)
class AbelOperator:
    """Dense matrix realization of :func:`abel_forward` for length ``n``."""

    n: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    def apply(self, profile: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(profile, dtype=np.float64)

    def adjoint(self, lineout: np.ndarray) -> np.ndarray:
        return abel_adjoint(lineout, self)

    @property
    def normal_row_sums(self) -> np.ndarray:
        """``A^T A 1``, the support of the SQS preconditioner."""
        return self.matrix.T @ (self.matrix @ np.ones(self.n))


@lru_cache(maxsize=8)
def abel_matrix(n: int) -> AbelOperator:
    """Build the ``n x n`` Abel matrix column by column from unit profiles."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    cols = abel_forward(np.eye(n))  # row j is A e_j
    return AbelOperator(n=n, matrix=np.ascontiguousarray(cols.T))


def abel_adjoint(lineout: np.ndarray, op: AbelOperator) -> np.ndarray:
    lineout = np.asarray(lineout, dtype=np.float64)
    if lineout.shape != (op.n,):
        raise ValueError(f"lineout length {lineout.shape} does not match operator n={op.n}")
    return op.matrix.T @ lineout
