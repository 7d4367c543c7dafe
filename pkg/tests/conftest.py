import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from emolink.lexicon import DIMS, Lexicon

# word counts matching the reference six-dimension dictionary
REFERENCE_COUNTS = {
    "Tension": 121,
    "Depression": 109,
    "Anger": 139,
    "Vigor": 156,
    "Fatigue": 70,
    "Confusion": 197,
}


@pytest.fixture(scope="session")
def reference_lexicon():
    """A 792-word lexicon with the reference per-dimension counts."""
    entries = {}
    for dim in DIMS:
        for i in range(REFERENCE_COUNTS[dim.value]):
            entries[f"{dim.value.lower()}{i:03d}"] = dim
    return Lexicon(entries)


@pytest.fixture
def small_lexicon():
    """Two words per dimension, handy for pipeline fixtures."""
    entries = {}
    for dim in DIMS:
        for i in range(2):
            entries[f"{dim.value.lower()}{i}"] = dim
    return Lexicon(entries)
