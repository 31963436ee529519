from pathlib import Path

import numpy as np
import pytest

from cavityqnd.measurement import build_components
from cavityqnd.model import SimulationParams
from cavityqnd.presets import cavity_run

ROOT = Path(__file__).resolve().parents[1]
CACHE_DIR = ROOT / ".cache" / "components"

_criteria = {}


def record_criterion(number, passed, detail):
    _criteria[number] = (bool(passed), detail)


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        ok, detail = _criteria[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


_components = {}


def cavity_components(L):
    """Measurement components of the Fig. 5 run with cavity length ``L`` (cached on disk)."""
    if L not in _components:
        params = SimulationParams(**cavity_run(L))
        _components[L] = (params, build_components(params, cache_dir=CACHE_DIR))
    return _components[L]


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
