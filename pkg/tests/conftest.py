from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def tdepth_grid():
    """Slopes, intercepts and printed colours of the mixed T-depth grid."""
    cells = json.loads((DATA / "tdepth_mixed_grid.json").read_text())
    for c in cells:
        c["beta"] = math.inf if c["beta"] == "inf" else float(c["beta"])
    return cells
