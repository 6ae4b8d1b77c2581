import numpy as np
import pytest

from vfvlab.eos import GasParams, total_energy
from vfvlab.grid import ConservativeField, Mesh


@pytest.fixture
def gas():
    return GasParams(1.4)


def random_valid_states(rng, size):
    """Random conservative states well inside the physical domain."""
    rho = rng.uniform(0.3, 3.0, size)
    ux = rng.uniform(-1.5, 1.5, size)
    uy = rng.uniform(-1.5, 1.5, size)
    p = rng.uniform(0.3, 4.0, size)
    return rho, ux, uy, p


def random_field(rng, mesh, gas, time=0.0):
    rho, ux, uy, p = random_valid_states(rng, (mesh.n, mesh.n))
    data = np.stack([rho, rho * ux, rho * uy, total_energy(rho, ux, uy, p, gas)])
    return ConservativeField(mesh, time, data)
