import numpy as np
import pytest

from conveyance.model import Grid, PhysicalParams


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def relax_pipeline():
    """Memoized Gamma_relax pipeline on the paper grid (|x|<=200, dx=0.1).

    The full diagonalization costs a few seconds per acceleration, so the
    results are shared across test modules.
    """
    from conveyance import spectral

    cache = {}
    grid = Grid.from_bounds(-200.0, 200.0, 0.1)
    p = PhysicalParams()

    def run(a: float):
        if a not in cache:
            cache[a] = spectral.relaxation_rate(p, a, grid, t_max=60.0, n_times=1201)
        return cache[a]

    return run
