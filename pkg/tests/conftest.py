import json
import time

import numpy as np
import pytest

from scatterct.cli import main


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="session")
def default_compare(tmp_path_factory):
    """One `compare` run with the default configuration, shared by tests."""
    out = tmp_path_factory.mktemp("compare_a")
    start = time.perf_counter()
    code = run_cli("compare", "--out", out, "--jobs", 1)
    seconds = time.perf_counter() - start
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    return {"dir": out, "seconds": seconds, "summary": summary}


@pytest.fixture(scope="session")
def default_sweep(tmp_path_factory):
    """One `sweep` run over the default grids for both methods."""
    out = tmp_path_factory.mktemp("sweep")
    code = run_cli("sweep", "--out", out, "--method", "both")
    assert code == 0
    return {"dir": out, "summary": json.loads((out / "sweep_summary.json").read_text())}
