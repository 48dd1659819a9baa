import numpy as np
import pytest

from cfdens.measure_grid import GridDensity, GridSpec, ReferenceMeasure

UNIT_MEASURE = ReferenceMeasure(continuous_interval=(0.0, 1.0))


def unit_grid(n_bins: int = 50) -> GridSpec:
    return GridSpec.from_measure(UNIT_MEASURE, n_bins)


def beta_on_grid(grid: GridSpec, a: float, b: float) -> GridDensity:
    from scipy.stats import beta

    return GridDensity.from_unnormalized(grid, beta.pdf(grid.centers, a, b))


@pytest.fixture
def grid50():
    return unit_grid(50)


@pytest.fixture
def mixed_measure():
    return ReferenceMeasure(continuous_interval=(10.0, 9990.0), atoms=((0.0, 1.0), (10000.0, 1.0)))


@pytest.fixture
def mixed_grid(mixed_measure):
    return GridSpec.from_measure(mixed_measure, 30)


def random_density(grid: GridSpec, rng: np.random.Generator) -> GridDensity:
    return GridDensity.from_unnormalized(grid, rng.uniform(0.1, 3.0, size=grid.n_cells))
