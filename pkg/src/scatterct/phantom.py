"""Random piecewise-constant shell phantoms."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["PhantomSpec", "generate", "profile_from_shells", "paper_suite", "SUITE_SIZE"]

SUITE_SIZE = 10


@dataclass(frozen=True)
class PhantomSpec:
    n: int = 129
    max_shells: int = 5
    density_range: tuple = (0.0, 20.0)
    seed: int = 0

    def __post_init__(self):
        low, high = self.density_range
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.max_shells < 1:
            raise ValueError("max_shells must be >= 1")
        if not 0 <= low < high:
            raise ValueError(f"need 0 <= low < high, got {self.density_range}")
        if 2 * self.max_shells > self.n:
            raise ValueError(
                f"cannot place {2 * self.max_shells} distinct boundaries in n={self.n} indices"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def profile_from_shells(n: int, boundaries, densities) -> np.ndarray:
    """Sum of ``density * indicator[start, end)`` over consecutive boundary pairs."""
    bounds = np.asarray(boundaries, dtype=np.int64)
    dens = np.asarray(densities, dtype=np.float64)
    if bounds.size != 2 * dens.size:
        raise ValueError("need exactly two boundaries per shell")
    profile = np.zeros(n)
    for (start, end), rho in zip(bounds.reshape(-1, 2), dens):
        profile[start:end] += rho
    return profile


def generate(spec: PhantomSpec) -> np.ndarray:
    """Draw a shell phantom: shell count, sorted distinct boundaries, densities."""
    rng = np.random.Generator(np.random.Philox(key=int(spec.seed)))
    m = int(rng.integers(1, spec.max_shells, endpoint=True))
    bounds = np.sort(rng.choice(spec.n, size=2 * m, replace=False))
    low, high = spec.density_range
    dens = rng.uniform(low, high, size=m)
    return profile_from_shells(spec.n, bounds, dens)


def paper_suite(base_seed: int = 0, spec: PhantomSpec = PhantomSpec()) -> list:
    """Ten phantoms from seeds ``base_seed .. base_seed + 9``."""
    return [generate(replace(spec, seed=base_seed + i)) for i in range(SUITE_SIZE)]
