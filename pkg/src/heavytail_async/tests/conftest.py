import shutil
from pathlib import Path

import pytest

from ..acceptance import schedules
from ..experiment import Mode, RunConfig, load_config
from ..noise import NoiseKind, NoiseSpec
from ..problems import ProblemKind, ProblemSpec
from ..runtimes import ClientGroup, RuntimeClass

TEST_DIR = Path(__file__).parent
FIXTURES_DIR = TEST_DIR / "fixtures"


@pytest.fixture
def fixture_files():
    """Fixture providing paths to test config files."""
    return {
        "golden": FIXTURES_DIR / "golden_run.json",
        "golden_metrics": FIXTURES_DIR / "golden_metrics.csv",
        "invalid": FIXTURES_DIR / "invalid_buffer.json",
        "sweep": FIXTURES_DIR / "sweep_small.json",
    }


@pytest.fixture
def golden_config(fixture_files):
    """Zero-noise quadratic whose metrics are computed by hand in golden_metrics.csv."""
    return load_config(fixture_files["golden"])


@pytest.fixture
def make_config():
    """Factory fixture building small quadratic runs with Pareto noise."""

    def _make(dim=3, **changes):
        cfg = RunConfig(
            problem=ProblemSpec(ProblemKind.QUADRATIC_DIAG, dim, params={"h": [1.0 + i for i in range(dim)]}),
            noise=NoiseSpec(NoiseKind.PARETO, 1.5, dim=dim),
            mode=Mode.CLIENT_CENTRIC,
            n_clients=4,
            buffer_size=2,
            local_steps=2,
            rounds=30,
            schedules=schedules(eta_outer=0.5, eta_local=0.1, u_local=1.0, u_outer=1.0),
            clients=[ClientGroup(RuntimeClass.SMALL, 2), ClientGroup(RuntimeClass.MEDIUM, 2)],
        )
        return cfg.with_overrides(**changes)

    return _make


@pytest.fixture
def tmp_base_dir():
    """Fixture providing a temporary output directory that's cleaned up after test."""
    base_dir = Path(__file__).parent / "temp"
    base_dir.mkdir(parents=True, exist_ok=True)

    yield base_dir.resolve()

    # Clean up after test
    if base_dir.exists():
        shutil.rmtree(base_dir)
