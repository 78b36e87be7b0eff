"""Table-I style comparison and hyperparameter grid search."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..abel import abel_matrix
from ..forward import TransmissionSet, simulate_transmission
from ..geometry import center_lineout
from ..phantom import generate
from ..recon import (
    ReconTrace,
    descatter,
    fit_density_to_direct,
    onestep_reconstruct,
    twostep_reconstruct,
)
from .config import ExperimentConfig

log = logging.getLogger(__name__)

__all__ = [
    "ONESTEP",
    "TWOSTEP",
    "METHODS",
    "rmse",
    "ProfileResult",
    "ExperimentResult",
    "simulate_profile",
    "run_profile",
    "run_comparison",
    "SweepCell",
    "SweepResult",
    "grid_search",
]

ONESTEP = "onestep"
TWOSTEP = "twostep"
METHODS = (ONESTEP, TWOSTEP)


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass
class ProfileResult:
    profile_id: int
    phantom_seed: int
    noise_seed: int
    truth: np.ndarray = field(repr=False)
    onestep: np.ndarray = field(repr=False)
    twostep: np.ndarray = field(repr=False)
    onestep_rmse: float
    twostep_rmse: float
    onestep_trace: ReconTrace = field(repr=False)
    twostep_trace: ReconTrace = field(repr=False)
    direct_lineout: np.ndarray = field(repr=False)
    scatter_lineout: np.ndarray = field(repr=False)
    transmission_lineout: np.ndarray = field(repr=False)
    seconds: dict = field(default_factory=dict, repr=False)
    failures: list = field(default_factory=list)

    @property
    def winner(self) -> str:
        if self.onestep_rmse < self.twostep_rmse:
            return ONESTEP
        if self.twostep_rmse < self.onestep_rmse:
            return TWOSTEP
        return "tie"


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    profiles: list

    def rmses(self, method: str) -> np.ndarray:
        return np.array([getattr(p, f"{method}_rmse") for p in self.profiles])

    def median(self, method: str) -> float:
        return float(np.median(self.rmses(method)))

    def wins(self, method: str) -> int:
        # ties count for both methods
        return sum(p.winner in (method, "tie") for p in self.profiles)

    @property
    def seconds(self) -> dict:
        total = {}
        for p in self.profiles:
            for k, v in p.seconds.items():
                total[k] = total.get(k, 0.0) + v
        return total


def simulate_profile(cfg: ExperimentConfig, index: int) -> TransmissionSet:
    rho = generate(replace(cfg.phantom, seed=cfg.phantom_seed(index)))
    phys = replace(cfg.physics, seed=cfg.noise_seed(index))
    return simulate_transmission(rho, cfg.make_kernel(), phys)


def run_profile(cfg: ExperimentConfig, index: int) -> ProfileResult:
    """Simulate one phantom and reconstruct it with both methods."""
    data = simulate_profile(cfg, index)
    kernel = cfg.make_kernel()
    op = abel_matrix(cfg.phantom.n)
    t = data.transmission

    clock = time.perf_counter()
    rho1, tr1 = onestep_reconstruct(t, kernel, op, cfg.onestep)
    mid = time.perf_counter()
    rho2, tr2 = twostep_reconstruct(t, kernel, op, cfg.twostep_recon, cfg.twostep_descatter)
    end = time.perf_counter()

    failures = []
    if tr1.line_search_failed:
        failures.append(f"{ONESTEP}: line search failure")
    if tr2.line_search_failed:
        failures.append(f"{TWOSTEP}: line search failure")
    for msg in failures:
        log.warning("profile %d: %s", index + 1, msg)
    truth = data.ground_truth
    return ProfileResult(
        profile_id=index + 1,
        phantom_seed=cfg.phantom_seed(index),
        noise_seed=cfg.noise_seed(index),
        truth=truth,
        onestep=rho1,
        twostep=rho2,
        onestep_rmse=rmse(rho1, truth),
        twostep_rmse=rmse(rho2, truth),
        onestep_trace=tr1,
        twostep_trace=tr2,
        direct_lineout=center_lineout(data.direct),
        scatter_lineout=center_lineout(data.scatter),
        transmission_lineout=center_lineout(t),
        seconds={ONESTEP: mid - clock, TWOSTEP: end - mid},
        failures=failures,
    )


def _run_profile_job(args):
    return run_profile(*args)


def run_comparison(cfg: ExperimentConfig, jobs: Optional[int] = None) -> ExperimentResult:
    """Run both methods on every phantom; results are ordered by profile id."""
    jobs = cfg.jobs if jobs is None else jobs
    tasks = [(cfg, i) for i in range(cfg.n_profiles)]
    if jobs <= 1:
        profiles = [_run_profile_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            profiles = list(pool.map(_run_profile_job, tasks))
    return ExperimentResult(config=cfg, profiles=profiles)


@dataclass(frozen=True)
class SweepCell:
    learning_rate: float
    alpha: float
    median_rmse: float


@dataclass
class SweepResult:
    method: str
    cells: list

    @property
    def best(self) -> SweepCell:
        """Global argmin; the first cell in grid order wins ties."""
        return min(self.cells, key=lambda c: c.median_rmse)

    def best_per_alpha(self) -> list:
        """Per-alpha best learning rate, sorted by alpha."""
        out = {}
        for c in self.cells:
            cur = out.get(c.alpha)
            if cur is None or c.median_rmse < cur.median_rmse:
                out[c.alpha] = c
        return [out[a] for a in sorted(out)]


def _sweep_profile(args):
    cfg, index, method, lr_grid, alpha_grid = args
    data = simulate_profile(cfg, index)
    kernel = cfg.make_kernel()
    op = abel_matrix(cfg.phantom.n)
    t, truth = data.transmission, data.ground_truth
    errors = np.full((len(lr_grid), len(alpha_grid)), np.inf)
    if method == TWOSTEP:
        # step 1 does not depend on the swept step-2 settings
        d_star, _ = descatter(t, kernel, cfg.twostep_descatter)
    for i, lr in enumerate(lr_grid):
        for j, alpha in enumerate(alpha_grid):
            try:
                if method == ONESTEP:
                    rc = replace(cfg.onestep, learning_rate=lr, alpha=alpha)
                    rho, _ = onestep_reconstruct(t, kernel, op, rc)
                else:
                    rc = replace(cfg.twostep_recon, learning_rate=lr, alpha=alpha)
                    rho, _ = fit_density_to_direct(d_star, op, rc)
                errors[i, j] = rmse(rho, truth)
            except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
                log.warning("sweep cell lr=%g alpha=%g profile %d failed: %s", lr, alpha, index + 1, exc)
    return errors


def grid_search(
    cfg: ExperimentConfig,
    lr_grid,
    alpha_grid,
    method: str,
    jobs: Optional[int] = None,
) -> SweepResult:
    """Median RMSE over the phantom suite for every (learning rate, alpha) pair.

    For the two-step method the grid applies to the density fit; the
    descattering step keeps its configured settings.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    lr_grid = [float(v) for v in lr_grid]
    alpha_grid = [float(v) for v in alpha_grid]
    if not lr_grid or not alpha_grid:
        raise ValueError("grids must be non-empty")
    jobs = cfg.jobs if jobs is None else jobs
    tasks = [(cfg, i, method, lr_grid, alpha_grid) for i in range(cfg.n_profiles)]
    if jobs <= 1:
        per_profile = [_sweep_profile(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_profile = list(pool.map(_sweep_profile, tasks))
    stacked = np.stack(per_profile)  # (profiles, lr, alpha)
    cells = []
    for i, lr in enumerate(lr_grid):
        for j, alpha in enumerate(alpha_grid):
            col = stacked[:, i, j]
            med = float(np.median(col)) if np.all(np.isfinite(col)) else math.inf
            cells.append(SweepCell(lr, alpha, med))
    return SweepResult(method=method, cells=cells)
