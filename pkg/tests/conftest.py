import numpy as np
import pytest
import torch

from chronosynth.synthetic import make_synthetic_dataset


@pytest.fixture(autouse=True)
def _torch_threads():
    torch.set_num_threads(2)


@pytest.fixture()
def tiny_dataset(tmp_path):
    """Four locations, two timestamps, 32px HR, factor 4 LR."""
    return make_synthetic_dataset(
        tmp_path / "ds",
        seed=11,
        n_locations=4,
        image_size=32,
        lr_factor=4,
        n_timestamps=2,
    )


@pytest.fixture()
def multi_time_dataset(tmp_path):
    """Three locations, four timestamps (enough for multi_lr with k=2)."""
    return make_synthetic_dataset(
        tmp_path / "ds4",
        seed=5,
        n_locations=3,
        image_size=32,
        lr_factor=4,
        n_timestamps=4,
    )


def rand_unit_image(rng: np.random.Generator, channels=3, height=32, width=32):
    return rng.random((channels, height, width)).astype(np.float32)
