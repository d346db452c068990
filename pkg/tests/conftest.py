import numpy as np
import pytest

from rankopt.backend import available_backends


def _ids(mod):
    return mod.NAME


@pytest.fixture(params=available_backends(), ids=_ids)
def kern(request):
    """Kernel backend under test (compiled and pure-python when available)."""
    return request.param


@pytest.fixture
def toy():
    """The two-variable worked example: pool of all four feasible points."""
    return {
        "pool": np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
        "c": np.array([2.0, -5.0]),
        "c_hat1": np.array([-1.0, 1.0]),
        "c_hat2": np.array([5.0, -11.0]),
    }


def dyadic(rng, shape, scale=16, denom=8):
    """Random dyadic rationals: exact in float64 under any summation order."""
    return rng.integers(-scale * denom, scale * denom + 1, size=shape) / denom
