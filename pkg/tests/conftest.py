import numpy as np
import pytest

from dan_lab import config
from dan_lab.core.data import MixtureSpec, NoiseSpec, ring_mixture
from dan_lab.core.training import NetworkDims, TrainConfig


# Central differences over every entry of x.data; func returns a scalar Tensor
def numerical_gradient(func, x, delta=1e-6):
    grad = np.zeros_like(x.data)
    it = np.nditer(x.data, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        original_value = x.data[idx]

        x.data[idx] = original_value + delta
        f_plus = func().item()

        x.data[idx] = original_value - delta
        f_minus = func().item()

        x.data[idx] = original_value
        grad[idx] = (f_plus - f_minus) / (2 * delta)
        it.iternext()
    return grad


def rel_err(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ring():
    return ring_mixture(8, 2.0, 0.01)


@pytest.fixture
def tiny_noise():
    return NoiseSpec(dim=4)


@pytest.fixture
def tiny_dims():
    return NetworkDims(
        generator=[4, 8, 2],
        discriminator=[2, 8, 1],
        phi=[2, 8],
        head=[8, 4, 1],
    )


@pytest.fixture
def tiny_train():
    return TrainConfig(iterations=5, batch_size=16, snapshot_every=2, seed=3)


@pytest.fixture
def tiny_config_dict():
    """A complete, fast experiment config (JSON form)."""
    return {
        "schema_version": config.SCHEMA_VERSION,
        "name": "tiny",
        "train": {"iterations": 4, "batch_size": 16, "snapshot_every": 2, "seed": 5, "xi": "S"},
        "data": ring_mixture(8, 2.0, 0.01).to_dict(),
        "noise": {"dim": 4, "distribution": "uniform"},
        "networks": {
            "generator": [4, 8, 2],
            "discriminator": [2, 8, 1],
            "phi": [2, 8],
            "head": [8, 4, 1],
            "generator_out_act": "none",
        },
        "eval": {"n_samples": 200, "mmd_samples": 50},
    }


@pytest.fixture
def one_d_gaussian():
    return MixtureSpec(means=[[0.0]], variances=[1.0], weights=[1.0])
