import pytest

from cpad import abe
from cpad.group import SeededRng, get_group

UNIVERSE = ("dummy", "temp", "humid", "motion", "radar", "lidar")


@pytest.fixture(scope="session")
def grp():
    """Small-field profile: full protocol semantics, fast unit tests."""
    return get_group("f512")


@pytest.fixture(scope="session")
def system(grp):
    """Shared (pp, msk) over a fixed universe; treat as read-only."""
    return abe.setup(UNIVERSE, grp, SeededRng(0xBEEF))


@pytest.fixture()
def rng():
    return SeededRng(0x5EED)
