import pytest

from bigraded.bicomplex import random_complex
from bigraded.spectral import Workspace


@pytest.fixture(scope="session")
def random_suite():
    """Twenty seeded random complexes with shared workspaces for the unit tests.

    The acceptance suite runs its own, larger batch.
    """
    out = []
    for seed in range(20):
        c = random_complex((4, 4), 4, seed)
        out.append((seed, c, Workspace(c)))
    return out


@pytest.fixture(scope="session")
def structured_suite():
    """Random complexes together with their hidden inventories and certificates."""
    out = []
    for seed in range(12):
        c, inventory, cert = random_complex((4, 4), 4, 1000 + seed, structure=True)
        out.append((seed, c, inventory, cert))
    return out
