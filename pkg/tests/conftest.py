import pytest

from hjhomog.effective import EffectiveHamiltonian1D
from hjhomog.problem import catalog


@pytest.fixture(scope="session")
def eff_tables():
    """Effective Hamiltonian tables per catalog name, built once per session."""
    cache = {}

    def get(name: str) -> EffectiveHamiltonian1D:
        if name not in cache:
            cache[name] = EffectiveHamiltonian1D.build(catalog(name))
        return cache[name]

    return get
