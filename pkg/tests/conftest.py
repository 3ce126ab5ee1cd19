import dataclasses
from pathlib import Path

import pytest

from spotfinder.config import load_config

FIXTURES = Path(__file__).parent / "fixtures"
SURVEY9 = FIXTURES / "survey9"

FIXED_EPOCH = 1700000000.0


def fixed_clock():
    return FIXED_EPOCH


@pytest.fixture
def survey9_config(tmp_path):
    """The committed 9-coordinate fixture survey, pointed at a scratch
    cache and store."""
    config = load_config(SURVEY9 / "config.json")
    return dataclasses.replace(
        config,
        backend=f"fixture:{SURVEY9 / 'backend.json'}",
        provider=f"fixture:{SURVEY9 / 'imagery'}",
        cache_root=str(tmp_path / "cache"),
        store_path=str(tmp_path / "spots.jsonl"),
    )
