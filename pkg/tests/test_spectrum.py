"""Tests for gap location and the spectral table."""

import numpy as np
import pytest

from zsactions.monodromy import lyapunov_batch
from zsactions.potential import preset
from zsactions.spectrum import compute_table, locate_gap


def test_constant_central_gap():
    """Constant c: the only open gap is (-c, c) with height c."""
    c = 0.1
    q = preset("constant", c=c)
    g = locate_gap(q, 0)
    assert not g.closed
    assert abs(g.z_minus + c) < 1e-10
    assert abs(g.z_plus - c) < 1e-10
    assert abs(g.z_crit) < 1e-10
    assert abs(g.h - c) < 1e-10


def test_constant_side_gaps_closed():
    q = preset("constant", c=0.1)
    table = compute_table(q, 4)
    for n in range(-4, 5):
        g = table.gap(n)
        if n == 0:
            assert not g.closed
        else:
            assert g.closed
            assert g.h == 0.0
            # tangency point of the n-th window: Delta'(z) = 0 near
            # sign(n) * sqrt(c^2 + (pi n)^2)
            target = np.sign(n) * np.sqrt(0.01 + (np.pi * n) ** 2)
            assert abs(g.z_crit - target) < 1e-9


def test_zero_potential_all_closed():
    q = preset("zero")
    table = compute_table(q, 8)
    for g in table.gaps:
        assert g.closed
        assert g.h == 0.0
        assert abs(g.z_crit - np.pi * g.n) < 1e-10


def test_edge_root_residuals():
    """(-1)^n Delta equals 1 at both edges of every open gap."""
    q = preset("two_mode")
    table = compute_table(q, 8)
    for g in table.open_gaps():
        edges = np.array([g.z_minus, g.z_plus])
        d, _, _, _ = lyapunov_batch(q, edges)
        assert np.max(np.abs((-1.0) ** g.n * d - 1.0)) < 1e-10


def test_interior_discriminant_above_one():
    q = preset("two_mode")
    table = compute_table(q, 8)
    for g in table.open_gaps():
        z = np.linspace(g.z_minus, g.z_plus, 21)
        d, _, _, _ = lyapunov_batch(q, z)
        assert np.min((-1.0) ** g.n * d) >= 1.0 - 1e-12


def test_width_height_invariant():
    """|g_n| <= 2 h_n within tolerance on every open gap."""
    q = preset("random_small", seed=1)
    table = compute_table(q, 16)
    assert table.open_gaps()
    for g in table.open_gaps():
        assert g.width <= 2.0 * g.h + 1e-9


def test_locate_gap_matches_table():
    q = preset("two_mode")
    table = compute_table(q, 3)
    for n in (-2, 1):
        g_single = locate_gap(q, n)
        g_table = table.gap(n)
        assert abs(g_single.z_minus - g_table.z_minus) < 1e-11
        assert abs(g_single.z_plus - g_table.z_plus) < 1e-11
        assert abs(g_single.h - g_table.h) < 1e-11


def test_table_metadata():
    q = preset("random_small", seed=2)
    table = compute_table(q, 16)
    assert table.small_norm
    assert table.s_min >= 1.0
    assert table.tail_bound == 0.0  # k_max = 3 < N = 16
    assert len(table.gaps) == 33
    assert table.eta.shape == (32,)


def test_negative_N_rejected():
    with pytest.raises(ValueError):
        compute_table(preset("zero"), -1)
