"""Tests for the transfer-matrix integrator and the discriminant."""

import numpy as np
import pytest

from zsactions.monodromy import (
    DEFAULT_CONFIG,
    IntegrationError,
    IntegratorConfig,
    fundamental_matrix,
    lyapunov,
    lyapunov_batch,
    lyapunov_oracle_constant,
    transfer_batch,
)
from zsactions.potential import preset


def test_zero_potential_discriminant():
    """With q = 0 the fundamental matrix is a rotation and Delta = cos z."""
    q = preset("zero")
    zs = np.linspace(-10, 10, 41)
    d, d1, d2, _ = lyapunov_batch(q, zs)
    assert np.max(np.abs(d - np.cos(zs))) < 1e-10
    assert np.max(np.abs(d1 + np.sin(zs))) < 1e-10
    assert np.max(np.abs(d2 + np.cos(zs))) < 1e-9


def test_constant_oracle_grid():
    q = preset("constant", c=0.1)
    zs = np.linspace(-20, 20, 201)
    d, d1, d2, _ = lyapunov_batch(q, zs)
    od, od1, od2 = lyapunov_oracle_constant(0.1, zs)
    assert np.max(np.abs(d - od)) < 1e-9
    assert np.max(np.abs(d1 - od1)) < 1e-9
    assert np.max(np.abs(d2 - od2)) < 1e-8


def test_determinant_is_one():
    """The transfer matrix of a traceless system has unit determinant."""
    q = preset("random_small", seed=4)
    zs = np.linspace(-5, 5, 17)
    states, _ = transfer_batch(q, zs)
    det = states[:, 0] * states[:, 3] - states[:, 1] * states[:, 2]
    assert np.max(np.abs(det - 1.0)) < 100 * DEFAULT_CONFIG.rel_tol


def test_derivatives_match_finite_differences():
    q = preset("random_small", seed=4)
    z0 = 2.3
    h = 1e-5
    val = lyapunov(q, z0)
    vp = lyapunov(q, z0 + h)
    vm = lyapunov(q, z0 - h)
    fd1 = (vp.delta - vm.delta) / (2 * h)
    fd2 = (vp.delta - 2 * val.delta + vm.delta) / h**2
    assert abs(val.d_delta - fd1) < 1e-6
    assert abs(val.dd_delta - fd2) < 1e-4


def test_fundamental_matrix_shapes():
    q = preset("constant", c=0.1)
    psi, dpsi, ddpsi = fundamental_matrix(q, 0.0)
    assert psi.shape == dpsi.shape == ddpsi.shape == (2, 2)
    # at z = 0 the constant potential gives Delta = cos(sqrt(-c^2)) = cosh(c)
    assert abs(0.5 * np.trace(psi) - np.cosh(0.1)) < 1e-10


def test_step_budget_exhaustion():
    q = preset("random_small", seed=4)
    tiny = IntegratorConfig(rel_tol=1e-14, abs_tol=1e-16, max_steps=3)
    with pytest.raises(IntegrationError):
        transfer_batch(q, np.array([1.0]), tiny)


def test_batch_matches_scalar():
    q = preset("two_mode")
    zs = np.array([0.3, 3.0, -6.2])
    d, d1, d2, _ = lyapunov_batch(q, zs)
    for i, z in enumerate(zs):
        val = lyapunov(q, z)
        assert abs(val.delta - d[i]) < 1e-14
        assert abs(val.d_delta - d1[i]) < 1e-14
        assert abs(val.dd_delta - d2[i]) < 1e-14
