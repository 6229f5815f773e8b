import numpy as np
import pytest

import phasekit as pk


@pytest.fixture(scope="session")
def radial_cycle():
    model = pk.make_model("radial")
    return model, pk.find_limit_cycle(model, (1.7, 0.1))


@pytest.fixture(scope="session")
def spiral_cycle():
    model = pk.make_model("spiral")
    return model, pk.find_limit_cycle(model, (0.5, 0.5))


@pytest.fixture(scope="session")
def sl_cycle():
    model = pk.make_model("stuart_landau", omega=2.0, c2=1.0)
    return model, pk.find_limit_cycle(model, (1.5, 0.1))


@pytest.fixture(scope="session")
def radial_sens(radial_cycle):
    model, cycle = radial_cycle
    return pk.phase_sensitivity(model, cycle)


@pytest.fixture(scope="session")
def spiral_sens(spiral_cycle):
    model, cycle = spiral_cycle
    return pk.phase_sensitivity(model, cycle)


def circ_err(a, b):
    """Max circular distance between two phase arrays."""
    return float(np.max(np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))))
