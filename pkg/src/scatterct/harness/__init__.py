from .config import ExperimentConfig, NOISE_SEED_OFFSET, load_config
from .container import read_array, write_array
from .experiment import (
    ExperimentResult,
    ProfileResult,
    grid_search,
    rmse,
    run_comparison,
)
from .reports import emit_reports, emit_sweep, rerender

__all__ = [
    "ExperimentConfig",
    "NOISE_SEED_OFFSET",
    "load_config",
    "read_array",
    "write_array",
    "ExperimentResult",
    "ProfileResult",
    "grid_search",
    "rmse",
    "run_comparison",
    "emit_reports",
    "emit_sweep",
    "rerender",
]
