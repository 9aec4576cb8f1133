import json

import numpy as np
import pytest

from hereditary.core.models import BasisSpec, HistorySpace
from hereditary.core.operator import SlsParams


@pytest.fixture
def sls():
    """Standard linear solid with C0=2, C1=1, λ=λ0=1 on T=1."""
    return SlsParams(C0=2.0, C1=1.0, lam=1.0, lambda0=1.0, T=1.0)


@pytest.fixture
def sls_balanced():
    """λ = λ0/2, so α = 0 and k = 1."""
    return SlsParams(C0=1.0, C1=1.0, lam=0.5, lambda0=1.0, T=1.0)


@pytest.fixture
def space():
    return HistorySpace.build(T=1.0, n=2000, lambda0=1.0)


@pytest.fixture
def small_space():
    return HistorySpace.build(T=1.0, n=200, lambda0=1.0)


@pytest.fixture
def basis(space):
    return BasisSpec(m=5, space=space)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sls_config():
    """Run configuration dict for a small SLS run; tests adjust it before validation."""
    return {
        "space": {"T": 1.0, "n": 200, "lambda0": 1.0},
        "basis": {"m": 3, "sweep": [5, 7], "k_max": 3},
        "oracle": {"oracle": "sls", "C0": 2.0, "C1": 1.0, "lambda": 1.0},
        "reduction": {"N_list": [1, 2, 7], "fourier_baseline": True},
        "tests": {"step": True},
    }


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return _write
