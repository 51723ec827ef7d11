#!/usr/bin/env python3
"""Compare the numba kernels against their pure-numpy fallbacks.

Runs every dual-path kernel on training-shaped arrays (a 128-sample batch
of 91x91 fields) and prints per-call times for both backends plus an
end-to-end training-step comparison. The numpy path is what you get with
DONN_NUMBA=0; this script imports both implementations directly so a
single run covers both.

Usage: python benchmarks/bench_kernels.py [--batch 128] [--repeats 30]
"""

import argparse
import time

import numpy as np

from donn import kernels
from donn.fields import GridSpec
from donn.network import random_init
from donn.readout import default_detector_layout
from donn.training import _loss_and_gradients_batch, encode_batch


def timeit(fn, repeats):
    fn()  # warmup / compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1e3


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--batch", type=int, default=128)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    if not kernels.USE_NUMBA:
        print(
            "numba backend is disabled (DONN_NUMBA=0 or numba missing); "
            "only the numpy path can be timed here"
        )
        return 1

    rng = np.random.default_rng(0)
    b, ny, nx = args.batch, 91, 91
    field = rng.normal(size=(b, ny, nx)) + 1j * rng.normal(size=(b, ny, nx))
    phase = rng.uniform(0, 2 * np.pi, size=(ny, nx))
    phase3 = rng.uniform(0, 2 * np.pi, size=(b, ny, nx))
    adjoint = rng.normal(size=(b, ny, nx)) + 1j * rng.normal(size=(b, ny, nx))
    grad = rng.normal(size=(ny, nx))

    def adam_args():
        return (
            phase.copy(), grad, np.zeros((ny, nx)), np.zeros((ny, nx)),
            1, 0.01, 0.9, 0.999, 1e-8,
        )

    cases = [
        ("apply_phase", kernels._apply_phase_nb, kernels._apply_phase_np,
         lambda f: f(field, phase, 1.0)),
        ("apply_phase_per_sample", kernels._apply_phase_per_sample_nb,
         kernels._apply_phase_per_sample_np, lambda f: f(field, phase3, 1.0)),
        ("intensity", kernels._intensity_nb, kernels._intensity_np,
         lambda f: f(field)),
        ("phase_gradient", kernels._phase_gradient_nb, kernels._phase_gradient_np,
         lambda f: f(field, adjoint)),
        ("adam_update", kernels._adam_update_nb, kernels._adam_update_np,
         lambda f: f(*adam_args())),
        ("quantize_phase", kernels._quantize_phase_nb, kernels._quantize_phase_np,
         lambda f: f(phase, 16)),
        ("hologram_fringe", kernels._hologram_fringe_nb, kernels._hologram_fringe_np,
         lambda f: f(phase3[0], phase, 1.0, 1.0)),
    ]

    print(f"batch {b}, grid {ny}x{nx}, {args.repeats} repeats, times in ms/call")
    print(f"{'kernel':<24} {'numba':>9} {'numpy':>9} {'speedup':>8}")
    for name, nb, np_impl, call in cases:
        t_nb = timeit(lambda: call(nb), args.repeats)
        t_np = timeit(lambda: call(np_impl), args.repeats)
        print(f"{name:<24} {t_nb:>8.2f} {t_np:>8.2f} {t_np / t_nb:>7.1f}x")

    # end-to-end: one training step (forward + adjoint + gradients)
    grid = GridSpec(nx, ny, 8e-6, 532e-9)
    net = random_init(grid, 3, [0.01] * 3, seed=0)
    layout = default_detector_layout(grid)
    images = rng.uniform(0.0, 1.0, size=(b, 28, 28))
    from donn.fields import EncodeSpec

    values = encode_batch(images, grid, EncodeSpec(upsample=3))
    labels = rng.integers(0, 10, size=b)

    def step():
        _loss_and_gradients_batch(net, values, labels, layout, 0.1, True)

    t_step = timeit(step, max(3, args.repeats // 10))
    print(
        f"\ntraining step (batch {b}, 3 layers, FFT-bound): {t_step:.0f} ms/call "
        f"with the {kernels.backend()} backend"
    )
    print("rerun with DONN_NUMBA=0 to measure the numpy-only step time")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
