from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest


ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

FIXTURES = ROOT / "datos"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20210528)


@pytest.fixture
def tmp_out(tmp_path: Path) -> Path:
    out = tmp_path / "salidas"
    out.mkdir()
    return out


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
