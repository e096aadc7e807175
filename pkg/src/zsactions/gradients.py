"""Action gradients, the interaction matrix and the frequency map.

Per open gap the height-to-action conversion factors are

    nu_n    = (-1)^(n-1) sinh(h_n) / Delta''(z_n),
    alpha_n = nu_n / h_n,

and the derivative of the cubic functional with respect to the actions is
recovered from the linear system F x = omega_tilde with

    F[m][n] = -(alpha_m/pi) integral_{g_n} v/(z - z_m)^2 dz   (m != n),
    F[n][n] = alpha_n + (alpha_n/(2*pi)) sum_{k != n} integral_{g_k} v/(z - z_n)^2 dz,

    omega_tilde_m = omega1_m - omega2_m,
    omega1_m = (4*alpha_m/pi)     integral_{g_m} v^2 v'/(z_m - z) dz,
    omega2_m = (4*alpha_m/(3*pi)) sum_{k != m} integral_{g_k} v^3/(z - z_m)^2 dz.

The frequencies follow as Omega_n = (2*pi*n)^2 + 4*H0 - x_n.  The system is
restricted to open gaps (closed gaps carry no action), is a small
near-identity dense matrix, and is solved by LU factorization with partial
pivoting (numpy.linalg.solve); the residual is recorded alongside the
solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .monodromy import IntegratorConfig
from .potential import FourierPotential, direct_H0
from .quasimomentum import (
    CRIT_GUARD,
    GapNodes,
    build_nodes,
    cross_gap_inverse_square,
    same_gap_vprime_integral,
)
from .spectrum import SpectralTable


class DegenerateCriticalPointError(RuntimeError):
    """Raised when Delta'' vanishes at a critical point (no height conversion)."""


@dataclass
class GradientData:
    """Gradient system over the open gaps, in ascending gap order."""

    open_idx: list[int]
    nu: np.ndarray
    alpha: np.ndarray
    F: np.ndarray
    omega_tilde: np.ndarray
    omega_tilde_1: np.ndarray
    omega_tilde_2: np.ndarray
    dU_dA: np.ndarray
    Omega: np.ndarray
    F_minus_I_HS: float
    solve_residual: float

    def index(self, n: int) -> int:
        return self.open_idx.index(n)


def nu_alpha(q: FourierPotential, table: SpectralTable):
    """Conversion factors (nu_n, alpha_n) per open gap, as dicts keyed by n."""
    nu, alpha = {}, {}
    for g in table.open_gaps():
        ddc = g.dd_delta_crit
        if abs(ddc) < 1e-12:
            raise DegenerateCriticalPointError(
                f"Delta'' vanishes at the critical point of gap n={g.n}"
            )
        nu[g.n] = (-1.0) ** (g.n - 1) * np.sinh(g.h) / ddc
        alpha[g.n] = nu[g.n] / g.h
    return nu, alpha


def f_matrix(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
    alpha: dict[int, float] = None,
) -> np.ndarray:
    """Interaction matrix F over the open gaps (ascending gap order)."""
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    if alpha is None:
        _, alpha = nu_alpha(q, table)
    idx = sorted(nodes.keys())
    k = len(idx)
    F = np.zeros((k, k))
    for i, m in enumerate(idx):
        zm = nodes[m].gap.z_crit
        diag_sum = 0.0
        for j, n in enumerate(idx):
            if n == m:
                continue
            cross = cross_gap_inverse_square(nodes[n], zm)
            F[i, j] = -alpha[m] * cross
            diag_sum += cross
        F[i, i] = alpha[m] * (1.0 + 0.5 * diag_sum)
    return F


def omega_tilde(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
    alpha: dict[int, float] = None,
):
    """Right-hand side omega_tilde = omega1 - omega2 over the open gaps.

    Returns (omega, omega1, omega2) as arrays in ascending gap order.  The
    same-gap integrand v^2 v'/(z_m - z) takes its analytic limit
    h_m^2 * (-v''(z_m)) within CRIT_GUARD of the critical point.
    """
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    if alpha is None:
        _, alpha = nu_alpha(q, table)
    idx = sorted(nodes.keys())
    k = len(idx)
    w1 = np.zeros(k)
    w2 = np.zeros(k)
    for i, m in enumerate(idx):
        nd = nodes[m]
        zm = nd.gap.z_crit
        diff = zm - nd.z
        near = np.abs(diff) < CRIT_GUARD
        integrand = np.where(
            near,
            nd.gap.h**2 * (-nd.vpp_crit),
            nd.v**2 * nd.vp / np.where(near, 1.0, diff),
        )
        w1[i] = (4.0 * alpha[m] / np.pi) * nd.integrate(integrand)
        acc = 0.0
        for n in idx:
            if n == m:
                continue
            other = nodes[n]
            acc += other.integrate(other.v**3 / (other.z - zm) ** 2)
        w2[i] = (4.0 * alpha[m] / (3.0 * np.pi)) * acc
    return w1 - w2, w1, w2


def du_dA_and_frequencies(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
) -> GradientData:
    """Assemble and solve the full gradient system.

    With no open gaps the system is empty and all arrays have length zero.
    """
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    idx = sorted(nodes.keys())
    nu_d, alpha_d = nu_alpha(q, table)
    nu = np.array([nu_d[n] for n in idx])
    alpha = np.array([alpha_d[n] for n in idx])
    F = f_matrix(q, table, config, nodes, alpha_d)
    omega, w1, w2 = omega_tilde(q, table, config, nodes, alpha_d)
    if idx:
        x = np.linalg.solve(F, omega)
        residual = float(np.linalg.norm(F @ x - omega))
    else:
        x = np.zeros(0)
        residual = 0.0
    h0 = direct_H0(q)
    Omega = np.array([(2.0 * np.pi * n) ** 2 + 4.0 * h0 for n in idx]) - x
    hs = float(np.linalg.norm(F - np.eye(len(idx))))
    return GradientData(
        open_idx=idx,
        nu=nu,
        alpha=alpha,
        F=F,
        omega_tilde=omega,
        omega_tilde_1=w1,
        omega_tilde_2=w2,
        dU_dA=x,
        Omega=Omega,
        F_minus_I_HS=hs,
        solve_residual=residual,
    )


def action_derivative_crosscheck(
    q: FourierPotential,
    table: SpectralTable,
    m: int,
    n: int,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
) -> tuple[float, float]:
    """Two equivalent quadratures of the action derivative dA_n/dh-route.

    lhs = (2*nu_m/pi) integral_{g_n} v'/(z_m - z) dz,
    rhs = -(2*nu_m/pi) integral_{g_n} v/(z - z_m)^2 dz,
    for m != n; both integrate over gap n against the pole at z_m.
    """
    if m == n:
        raise ValueError("cross-check is defined for distinct gaps m != n")
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    nu_d, _ = nu_alpha(q, table)
    nd = nodes[n]
    zm = nodes[m].gap.z_crit
    lhs = (2.0 * nu_d[m] / np.pi) * nd.integrate(nd.vp / (zm - nd.z))
    rhs = -(2.0 * nu_d[m] / np.pi) * nd.integrate(nd.v / (nd.z - zm) ** 2)
    return float(lhs), float(rhs)
