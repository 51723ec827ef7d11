import numpy as np
import pytest

from donn.fields import ComplexField, GridSpec, total_power
from donn.propagation import (
    adjoint_propagate,
    bandlimit_to_propagating,
    cached_transfer_function,
    propagate,
    propagating_mask,
    transfer_function,
)
from donn.scenes import gaussian_scene

# pitch comparable to wavelength so the grid carries an evanescent band
EVANESCENT_GRID = GridSpec(16, 16, 1e-6, 2.5e-6)
# fine sampling relative to wavelength: all representable modes propagate
SMOOTH_GRID = GridSpec(16, 16, 1e-6, 0.5e-6)


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    return ComplexField(grid, v)


def test_transfer_function_dc_value():
    for d in (0.0, 3e-6, 1e-3):
        tf = transfer_function(SMOOTH_GRID, d)
        expected = np.exp(1j * 2 * np.pi * d / SMOOTH_GRID.wavelength)
        assert tf.values[0, 0] == pytest.approx(expected, abs=1e-15)


def test_transfer_function_zero_distance_is_one():
    tf = transfer_function(EVANESCENT_GRID, 0.0)
    assert np.array_equal(tf.values, np.ones(EVANESCENT_GRID.shape))


def test_transfer_function_unit_modulus_on_propagating():
    tf = transfer_function(EVANESCENT_GRID, 17e-6)
    mask = propagating_mask(EVANESCENT_GRID)
    assert np.allclose(np.abs(tf.values[mask]), 1.0, atol=1e-15)


def test_transfer_function_evanescent_attenuation():
    grid = EVANESCENT_GRID
    d = 4e-6
    tf = transfer_function(grid, d)
    fx = np.fft.fftfreq(grid.nx, grid.pitch)
    fy = np.fft.fftfreq(grid.ny, grid.pitch)
    f2 = fx[None, :] ** 2 + fy[:, None] ** 2
    ev = f2 > 1.0 / grid.wavelength**2
    assert ev.any()
    expected = np.exp(-2 * np.pi * d * np.sqrt(f2[ev] - 1.0 / grid.wavelength**2))
    assert np.allclose(np.abs(tf.values[ev]), expected, rtol=1e-13)
    assert np.all(np.abs(tf.values[ev]) < 1.0)


def test_propagate_zero_distance_identity():
    f = random_field(SMOOTH_GRID, 1)
    out = propagate(f, transfer_function(SMOOTH_GRID, 0.0))
    assert np.abs(out.values - f.values).max() < 1e-13


def test_propagate_plane_wave_global_phase():
    grid = SMOOTH_GRID
    f = ComplexField(grid, np.full(grid.shape, 0.7 + 0.2j))
    d = 23e-6
    out = propagate(f, transfer_function(grid, d))
    expected = f.values * np.exp(1j * 2 * np.pi * d / grid.wavelength)
    assert np.allclose(out.values, expected, atol=1e-13)
    assert np.allclose(out.intensity(), f.intensity(), atol=1e-13)


def test_propagate_grid_mismatch():
    f = random_field(SMOOTH_GRID, 2)
    tf = transfer_function(GridSpec(16, 16, 2e-6, 0.5e-6), 1e-6)
    with pytest.raises(ValueError, match="grid mismatch"):
        propagate(f, tf)


def test_gaussian_beam_spread_matches_analytic():
    warm = gaussian_scene(0.001)
    z_r = warm.rayleigh_range
    for z in (z_r, 2 * z_r):
        res = gaussian_scene(z)
        assert res.relative_error < 0.01


def test_bandlimit_constant_field_unchanged():
    grid = EVANESCENT_GRID
    f = ComplexField(grid, np.full(grid.shape, 1.0 + 0.0j))
    out = bandlimit_to_propagating(f)
    assert np.allclose(out.values, f.values, atol=1e-13)


def test_bandlimit_pure_evanescent_zeroed():
    grid = EVANESCENT_GRID
    # highest spatial frequency: alternating sign pattern, fully evanescent here
    v = ((-1.0) ** (np.arange(16)[:, None] + np.arange(16)[None, :])).astype(complex)
    out = bandlimit_to_propagating(ComplexField(grid, v))
    assert np.abs(out.values).max() < 1e-13


def test_bandlimit_idempotent():
    f = random_field(EVANESCENT_GRID, 3)
    once = bandlimit_to_propagating(f)
    twice = bandlimit_to_propagating(once)
    assert np.abs(twice.values - once.values).max() < 1e-13


def test_adjoint_zero_distance_identity():
    f = random_field(EVANESCENT_GRID, 4)
    out = adjoint_propagate(f, transfer_function(EVANESCENT_GRID, 0.0))
    assert np.abs(out.values - f.values).max() < 1e-13


def test_adjoint_inner_product_identity():
    grid = EVANESCENT_GRID
    tf = transfer_function(grid, 9e-6)
    for seed in range(5):
        a = random_field(grid, 10 + seed)
        b = random_field(grid, 20 + seed)
        lhs = np.vdot(propagate(a, tf).values, b.values)
        rhs = np.vdot(a.values, adjoint_propagate(b, tf).values)
        assert abs(lhs - rhs) / abs(lhs) < 1e-12


def test_forward_then_adjoint_restores_bandlimited():
    grid = EVANESCENT_GRID
    tf = transfer_function(grid, 11e-6)
    u = bandlimit_to_propagating(random_field(grid, 5))
    back = adjoint_propagate(propagate(u, tf), tf)
    assert np.abs(back.values - u.values).max() < 1e-11


def test_power_conservation_on_propagating_modes():
    grid = EVANESCENT_GRID
    rng = np.random.default_rng(6)
    for _ in range(20):
        u = bandlimit_to_propagating(random_field(grid, int(rng.integers(1e6))))
        d = float(rng.uniform(0.0, 40e-6))
        p0 = total_power(u)
        p1 = total_power(propagate(u, transfer_function(grid, d)))
        assert abs(p1 - p0) / p0 < 1e-10


def test_composition_of_distances():
    grid = EVANESCENT_GRID
    f = random_field(grid, 7)
    d1, d2 = 6e-6, 13e-6
    once = propagate(f, transfer_function(grid, d1 + d2))
    stepped = propagate(
        propagate(f, transfer_function(grid, d1)), transfer_function(grid, d2)
    )
    assert np.abs(once.values - stepped.values).max() < 1e-11


def test_inverse_restores_bandlimited_field():
    # Distance kept small enough that the negative-distance evanescent
    # amplification of FFT roundoff stays below the tolerance.
    grid = EVANESCENT_GRID
    u = bandlimit_to_propagating(random_field(grid, 8))
    d = 2e-6
    back = propagate(propagate(u, transfer_function(grid, d)),
                     transfer_function(grid, -d))
    assert np.abs(back.values - u.values).max() < 1e-11


def test_linearity():
    grid = EVANESCENT_GRID
    tf = transfer_function(grid, 5e-6)
    a, b = random_field(grid, 9), random_field(grid, 10)
    alpha, beta = 0.3 - 1.1j, 2.2 + 0.4j
    combined = propagate(
        ComplexField(grid, alpha * a.values + beta * b.values), tf
    )
    separate = alpha * propagate(a, tf).values + beta * propagate(b, tf).values
    scale = np.abs(separate).max()
    assert np.abs(combined.values - separate).max() / scale < 1e-12


def test_no_gain_for_nonnegative_distance():
    grid = EVANESCENT_GRID
    rng = np.random.default_rng(11)
    for _ in range(10):
        f = random_field(grid, int(rng.integers(1e6)))
        d = float(rng.uniform(0.0, 30e-6))
        assert total_power(propagate(f, transfer_function(grid, d))) <= total_power(
            f
        ) * (1 + 1e-12)


def test_transfer_function_cache_reuses_objects():
    a = cached_transfer_function(SMOOTH_GRID, 1e-3)
    b = cached_transfer_function(GridSpec(16, 16, 1e-6, 0.5e-6), 1e-3)
    assert a is b
