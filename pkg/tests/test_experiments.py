"""Long-running experiments: paper-scale reproduction and the depth sweep.

Both are excluded from the default run (`-m slow` enables them). The
paper-scale test additionally needs real MNIST IDX files via
DONN_MNIST_DIR; everything else falls back to the synthetic digits.
"""

import os
import time
from pathlib import Path

import pytest

import donn
from donn.readout import default_detector_layout
from donn.training import TrainConfig, depth_sweep, evaluate, train

pytestmark = pytest.mark.slow


def test_paper_scale_reproduction():
    mnist = os.environ.get("DONN_MNIST_DIR")
    if not mnist:
        pytest.skip(
            "paper-scale reproduction needs real MNIST (DONN_MNIST_DIR); "
            "the tool does not download datasets"
        )
    from donn.cli import _load_split

    train_set = _load_split(Path(mnist), "train")
    test_set = _load_split(Path(mnist), "test")
    grid = donn.DEFAULT_GRID
    layout = default_detector_layout(grid)
    net = donn.random_init(grid, 3, [0.01] * 3, seed=0)
    config = TrainConfig(epochs=100, batch_size=128, seed=0, eval_every=10)
    t0 = time.perf_counter()
    result = train(
        net, train_set.images, train_set.labels, test_set.images,
        test_set.labels, layout, config,
        log_fn=lambda r: print(
            f"epoch {r.epoch}: loss={r.loss:.4f} acc={r.test_accuracy}", flush=True
        ),
    )
    acc, _ = evaluate(result.network, test_set.images, test_set.labels, layout)
    print(
        f"\n[REPORT] paper-scale reproduction: accuracy {acc:.4f} "
        f"(target 0.912 +- 0.02) in {(time.perf_counter()-t0)/3600:.2f} h"
    )
    # extended target, not a gate: assert a sane outcome and report the rest
    assert acc > 0.80


def test_depth_sweep_diminishing_returns(desk_data):
    train_images, train_labels, test_images, test_labels = desk_data
    grid = donn.DEFAULT_GRID
    layout = default_detector_layout(grid)
    config = TrainConfig(epochs=20, batch_size=128, seed=0, eval_every=10**9)
    table = depth_sweep(
        [1, 2, 3], train_images, train_labels, test_images, test_labels,
        layout, config, grid, 0.01, network_seed=0,
    )
    print("\n[REPORT] depth sweep (desk scale):")
    for depth, acc in table:
        print(f"  depth {depth}: accuracy {acc:.4f}")
    accs = dict(table)
    gain_12 = accs[2] - accs[1]
    gain_23 = accs[3] - accs[2]
    print(f"  marginal gains: 1->2 = {gain_12:+.4f}, 2->3 = {gain_23:+.4f}")
    # depth helps less and less; the trend is asserted only at the margin level
    assert gain_23 < gain_12
