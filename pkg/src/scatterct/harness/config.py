"""Experiment configuration and its JSON form.

The JSON document mirrors :class:`ExperimentConfig`; every key is optional
and missing keys fall back to the defaults below::

    {
      "n_profiles": 10,
      "kernel": "paper",
      "phantom": {"n": 129, "max_shells": 5, "density_range": [0, 20], "seed": 0},
      "physics": {"xi": 0.001, "noise_sigma": 0.03, "seed": 1000000,
                  "order": "exp_then_spin"},
      "onestep": {"learning_rate": 0.03, "alpha": 0.001, "max_iters": 20},
      "twostep_descatter": {"learning_rate": 1.0, "alpha": 0.0, "max_iters": 10},
      "twostep_recon": {"learning_rate": 0.01, "alpha": 0.0007, "max_iters": 20},
      "out_dir": "results",
      "jobs": 1
    }

``xi`` and ``order`` in the reconstruction sections are always taken from
``physics``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..phantom import PhantomSpec
from ..forward import PhysicsConfig
from ..recon import ReconConfig
from ..scatter import ScatterKernel, identity_kernel, make_paper_kernel, zero_kernel

__all__ = [
    "ExperimentConfig",
    "NOISE_SEED_OFFSET",
    "KERNELS",
    "load_config",
    "config_from_dict",
]

#: Noise keys live at ``physics.seed + profile_index``; the offset keeps them
#: away from phantom keys (``phantom.seed + profile_index``).
NOISE_SEED_OFFSET = 1_000_000

KERNELS = {
    "paper": make_paper_kernel,
    "identity": identity_kernel,
    "zero": zero_kernel,
}


def _onestep_default():
    return ReconConfig(learning_rate=3e-2, alpha=1e-3, max_iters=20)


def _descatter_default():
    return ReconConfig(learning_rate=1.0, alpha=0.0, max_iters=10)


def _twostep_default():
    return ReconConfig(learning_rate=1e-2, alpha=7e-4, max_iters=20)


@dataclass(frozen=True)
class ExperimentConfig:
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    physics: PhysicsConfig = field(
        default_factory=lambda: PhysicsConfig(seed=NOISE_SEED_OFFSET)
    )
    onestep: ReconConfig = field(default_factory=_onestep_default)
    twostep_descatter: ReconConfig = field(default_factory=_descatter_default)
    twostep_recon: ReconConfig = field(default_factory=_twostep_default)
    kernel: str = "paper"
    n_profiles: int = 10
    out_dir: str = "results"
    jobs: int = 1

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; choose from {sorted(KERNELS)}")
        if self.n_profiles < 1:
            raise ValueError("n_profiles must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        # reconstruction always uses the simulation's physics
        for name in ("onestep", "twostep_descatter", "twostep_recon"):
            cfg = getattr(self, name)
            if cfg.xi != self.physics.xi or cfg.order != self.physics.order:
                object.__setattr__(
                    self, name, replace(cfg, xi=self.physics.xi, order=self.physics.order)
                )

    def make_kernel(self) -> ScatterKernel:
        return KERNELS[self.kernel]()

    def phantom_seed(self, index: int) -> int:
        return self.phantom.seed + index

    def noise_seed(self, index: int) -> int:
        return self.physics.seed + index

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(
            self,
            phantom=replace(self.phantom, seed=seed),
            physics=replace(self.physics, seed=seed + NOISE_SEED_OFFSET),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phantom"]["density_range"] = list(self.phantom.density_range)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _merge(cls, base, overrides: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return replace(base, **overrides)


def config_from_dict(data: dict) -> ExperimentConfig:
    base = ExperimentConfig()
    data = dict(data)
    sections = {
        "phantom": PhantomSpec,
        "physics": PhysicsConfig,
        "onestep": ReconConfig,
        "twostep_descatter": ReconConfig,
        "twostep_recon": ReconConfig,
    }
    kwargs = {}
    for key, cls in sections.items():
        if key in data:
            section = dict(data.pop(key))
            if key == "phantom" and "density_range" in section:
                section["density_range"] = tuple(section["density_range"])
            kwargs[key] = _merge(cls, getattr(base, key), section)
    return _merge(ExperimentConfig, base, {**data, **kwargs})


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)
