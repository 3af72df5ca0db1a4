import numpy as np
import pytest

from locplex.model import CostParams, Instance, Network
from locplex.solvers import allocate_nearest


def random_instance(rng: np.random.Generator, n: int, depot: bool = True, zero_frac: float = 0.0) -> Instance:
    xy = rng.uniform(0, 100, size=(n, 2))
    dist = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(-1))
    demand = rng.uniform(1, 100, size=n)
    if zero_frac:
        demand[rng.random(n) < zero_frac] = 0.0
        if demand.sum() == 0:
            demand[0] = 1.0
    return Instance(demand, dist, depot=int(rng.integers(n)) if depot else None)


def random_partition(rng: np.random.Generator, n: int, k: int) -> Network:
    fac = sorted(rng.choice(n, size=k, replace=False).tolist())
    alloc = {i: int(rng.choice(fac)) for i in range(n)}
    for f in fac:
        alloc[f] = f
    return Network(tuple(fac), alloc)


def random_network(rng, inst, k, params=None) -> Network:
    fac = rng.choice(inst.n, size=k, replace=False).tolist()
    return allocate_nearest(inst, fac, params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line_instance():
    """Five nodes on a line at 0,1,2,3,4 with unit demand."""
    x = np.arange(5, dtype=float)
    return Instance(np.ones(5), np.abs(x[:, None] - x[None, :]), depot=0)


@pytest.fixture
def simple_params():
    return CostParams(r=10.0, gamma=1.0)
