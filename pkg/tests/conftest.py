"""Shared fixtures: JIT warm-up and small reusable datasets."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

import touristnet as tn

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    """Compile the walk kernel once so timed tests measure walks, not JIT."""
    ds = tn.LabeledDataset(
        features=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.1], [5.0, 5.0], [6.0, 5.0], [5.0, 6.1]]),
        labels=np.array([0, 0, 0, 1, 1, 1]),
        kinds=("numeric", "numeric"),
        label_names=("a", "b"),
    )
    g = tn.build_training_network(ds, tn.NetConfig(1, 0.5))
    tn.component_stats(g, 0, mu=2)
    tn.walk_profile(g, 0, mu_max=3)


@pytest.fixture(scope="session")
def iris_path() -> Path:
    return DATA_DIR / "iris.csv"


@pytest.fixture(scope="session")
def wine_path() -> Path:
    return DATA_DIR / "wine.csv"


@pytest.fixture(scope="session")
def digits_paths() -> tuple[Path, Path]:
    return (
        DATA_DIR / "digits-images-idx3-ubyte.gz",
        DATA_DIR / "digits-labels-idx1-ubyte.gz",
    )


@pytest.fixture()
def two_blob_ds() -> tn.LabeledDataset:
    """Two well separated 2-D blobs, three points each."""
    return tn.LabeledDataset(
        features=np.array(
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.1], [5.0, 5.0], [6.0, 5.0], [5.0, 6.1]]
        ),
        labels=np.array([0, 0, 0, 1, 1, 1]),
        kinds=("numeric", "numeric"),
        label_names=("a", "b"),
    )
