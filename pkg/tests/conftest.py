"""Shared fixtures: dataset directories and the desk-scale trained model.

Real MNIST is used when DONN_MNIST_DIR points at a directory holding the
standard IDX files; otherwise a seeded synthetic digit set stands in, so
the suite runs hermetically.
"""

import os
from pathlib import Path

import pytest

import synthdigits

DESK_TRAIN = 10_000
DESK_TEST = 2_000
SYNTH_SEED = 20240501


def _mnist_dir():
    path = os.environ.get("DONN_MNIST_DIR")
    if not path:
        return None
    root = Path(path)
    for stem in ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"):
        if not (root / stem).exists() and not (root / f"{stem}.gz").exists():
            return None
    return root


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Directory holding train/t10k IDX pairs (real MNIST if available)."""
    mnist = _mnist_dir()
    if mnist is not None:
        return mnist
    root = tmp_path_factory.mktemp("synthdata")
    synthdigits.write_dataset_dir(root, DESK_TRAIN, DESK_TEST, seed=SYNTH_SEED)
    return root


@pytest.fixture(scope="session")
def desk_data(dataset_dir):
    """(train_images, train_labels, test_images, test_labels) at desk scale."""
    from donn.cli import _load_split

    train = _load_split(Path(dataset_dir), "train")
    test = _load_split(Path(dataset_dir), "test")
    return (
        train.images[:DESK_TRAIN],
        train.labels[:DESK_TRAIN],
        test.images[:DESK_TEST],
        test.labels[:DESK_TEST],
    )


@pytest.fixture(scope="session")
def small_dataset_dir(tmp_path_factory):
    """A light 300/100 split for CLI smoke tests."""
    root = tmp_path_factory.mktemp("smalldata")
    synthdigits.write_dataset_dir(root, 300, 100, seed=SYNTH_SEED + 7)
    return root


@pytest.fixture(scope="session")
def desk_model(desk_data):
    """The desk-scale trained model: 10k samples, 20 epochs, 3 x 91 x 91.

    Session scoped because training takes minutes; the acceptance module
    asserts on the training outcome and reuses the network for the
    realization experiments.
    """
    import time

    import donn
    from donn.readout import default_detector_layout
    from donn.training import TrainConfig, train

    train_images, train_labels, test_images, test_labels = desk_data
    grid = donn.DEFAULT_GRID
    layout = default_detector_layout(grid)
    untrained = donn.random_init(grid, 3, [0.01] * 3, seed=0)
    config = TrainConfig(epochs=20, batch_size=128, seed=0, eval_every=5)
    t0 = time.perf_counter()
    result = train(
        untrained, train_images, train_labels, test_images, test_labels,
        layout, config,
    )
    elapsed = time.perf_counter() - t0
    return {
        "untrained": untrained,
        "result": result,
        "layout": layout,
        "grid": grid,
        "train_seconds": elapsed,
        "test_images": test_images,
        "test_labels": test_labels,
        "config": config,
    }
