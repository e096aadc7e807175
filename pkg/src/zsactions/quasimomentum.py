"""Gap function v, action variables and the integral functionals built on v.

On an open gap g_n = (z_minus, z_plus) the discriminant satisfies
(-1)^n Delta >= 1, and the gap function is

    v(z) = arccosh((-1)^n Delta(z)) >= 0,
    v'   = (-1)^n Delta' / sinh v,
    v''  = ((-1)^n Delta'' - cosh(v) v'^2) / sinh v,

with the limits v' = 0 and v'' = (-1)^n Delta''(z_crit)/sinh(h) at the
critical point.  Everything downstream (actions, moment functionals, the
cubic functional, cross-gap comparison series) is a quadrature of v or its
derivatives over the gaps.  All quadratures use the substitution
z = z0 + r*cos(theta), which absorbs the square-root vanishing of v at the
edges and converges spectrally; the nodes of every open gap are filled from
one batched integrator call and shared by all downstream consumers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .monodromy import DEFAULT_CONFIG, IntegratorConfig, transfer_batch
from .potential import FourierPotential
from .spectrum import Gap, SpectralTable

#: below this v the derivative formulas divide by noise; contributions are
#: quadratically small there, so v'/v'' are zeroed instead
V_FLOOR = 1e-8

#: same-gap integrands of the form f(z)/(z_m - z) switch to their analytic
#: limit inside this distance of the critical point
CRIT_GUARD = 1e-7

#: points closer to a gap edge than this in discriminant excess are rejected
EDGE_EXCESS_MIN = 1e-13

DEFAULT_QUAD_NODES = 128

#: degree of the per-gap Chebyshev de-noising fit of v^2/sin^2(theta)
FIT_DEGREE = 8


def _gl_theta(n_nodes):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    theta = 0.5 * np.pi * (x + 1.0)
    return theta, 0.5 * np.pi * w


def _v_from_states(states, sign):
    """Gap function and derivatives from raw transfer-matrix entries.

    Uses the cancellation-free combination
    sinh^2(v) = Delta^2 - det(Psi) = ((Psi11 - Psi22)/2)^2 + Psi12*Psi21,
    which avoids forming the ill-conditioned excess Delta - 1 near the edges.
    """
    B = ((states[:, 0] - states[:, 3]) / 2.0) ** 2 + states[:, 1] * states[:, 2]
    B = np.maximum(0.0, B)
    sinh_v = np.sqrt(B)
    v = np.arcsinh(sinh_v)
    d1 = 0.5 * (states[:, 4] + states[:, 7])
    d2 = 0.5 * (states[:, 8] + states[:, 11])
    ok = v > V_FLOOR
    safe = np.where(ok, sinh_v, 1.0)
    vp = np.where(ok, sign * d1 / safe, 0.0)
    vpp = np.where(ok, (sign * d2 - np.sqrt(1.0 + B) * vp**2) / safe, 0.0)
    return v, vp, vpp, d1, d2


def _denoise_v(theta, v):
    """Project node values of v onto the exact edge structure.

    On an open gap v(z0 + r*cos(theta)) = sin(theta) * sqrt(m(cos(theta)))
    with m analytic, so a low-degree weighted Chebyshev fit of v^2/sin^2
    recovers v near the edges from the well-conditioned interior nodes.  The
    weights downscale nodes in proportion to their noise (the absolute error
    of v^2 is roughly uniform, so its relative error scales like 1/sin^4).
    """
    s2 = np.sin(theta) ** 2
    x = np.cos(theta)
    m = v * v / s2
    deg = min(FIT_DEGREE, theta.size - 1)
    vander = np.polynomial.chebyshev.chebvander(x, deg)
    w = s2 * s2
    coef, *_ = np.linalg.lstsq(w[:, None] * vander, w * m, rcond=None)
    return np.sqrt(np.maximum(0.0, (vander @ coef) * s2))


@dataclass
class GapNodes:
    """Quadrature nodes of one open gap, with v data cached at the nodes.

    theta/weight are Gauss-Legendre on (0, pi); z = z0 + r*cos(theta).  The
    half-resolution set only carries v and is used for quadrature error
    estimates.
    """

    gap: Gap
    theta: np.ndarray
    weight: np.ndarray
    z: np.ndarray
    v: np.ndarray
    vp: np.ndarray
    vpp: np.ndarray
    theta_h: np.ndarray
    z_h: np.ndarray
    w_h: np.ndarray
    v_h: np.ndarray
    vpp_crit: float

    @property
    def z0(self) -> float:
        return self.gap.midpoint

    @property
    def r(self) -> float:
        return self.gap.radius

    def integrate(self, values) -> float:
        """Integrate values (sampled at the nodes) over the gap in dz."""
        return float(np.sum(self.weight * values * self.r * np.sin(self.theta)))

    def half_integral(self, values_h) -> float:
        """Same integral on the half-resolution rule, for error estimates."""
        return float(np.sum(self.w_h * values_h * self.r * np.sin(self.theta_h)))


def build_nodes(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> dict[int, GapNodes]:
    """Fill quadrature nodes for every open gap with one batched integration."""
    config = config or table.config
    open_gaps = table.open_gaps()
    if not open_gaps:
        return {}
    theta, weight = _gl_theta(quad_nodes)
    theta_h, w_h = _gl_theta(max(2, quad_nodes // 2))
    all_z = []
    for g in open_gaps:
        all_z.append(g.midpoint + g.radius * np.cos(theta))
        all_z.append(g.midpoint + g.radius * np.cos(theta_h))
    flat = np.concatenate(all_z)
    states, _ = transfer_batch(q, flat, config)
    nodes = {}
    pos = 0
    nh = theta_h.size
    for g in open_gaps:
        sign = (-1.0) ** g.n
        z_full = flat[pos : pos + quad_nodes]
        vf, _, _, d1f, d2f = _v_from_states(states[pos : pos + quad_nodes], sign)
        vf = _denoise_v(theta, vf)
        sinh_v = np.sinh(vf)
        ok = vf > V_FLOOR
        safe = np.where(ok, sinh_v, 1.0)
        vpf = np.where(ok, sign * d1f / safe, 0.0)
        vppf = np.where(ok, (sign * d2f - np.cosh(vf) * vpf**2) / safe, 0.0)
        pos += quad_nodes
        z_half = flat[pos : pos + nh]
        vh, _, _, _, _ = _v_from_states(states[pos : pos + nh], sign)
        pos += nh
        nodes[g.n] = GapNodes(
            gap=g,
            theta=theta,
            weight=weight,
            z=z_full,
            v=vf,
            vp=vpf,
            vpp=vppf,
            theta_h=theta_h,
            z_h=z_half,
            w_h=w_h,
            v_h=vh,
            vpp_crit=sign * g.dd_delta_crit / np.sinh(g.h),
        )
    return nodes


class GapFunction:
    """Pointwise evaluator of (v, v', v'') on one open gap."""

    def __init__(self, q: FourierPotential, gap: Gap, config: IntegratorConfig = DEFAULT_CONFIG):
        if gap.closed:
            raise ValueError(f"gap n={gap.n} is closed; the gap function is trivial")
        self.q = q
        self.gap = gap
        self.config = config
        self._sign = (-1.0) ** gap.n
        self._vpp_crit = self._sign * gap.dd_delta_crit / np.sinh(gap.h)

    def eval(self, z):
        """Evaluate at scalar or array z inside the closed gap.

        Points whose discriminant excess is below EDGE_EXCESS_MIN (hence too
        close to an edge for the arccosh to carry information) raise
        ValueError rather than returning noise.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z < self.gap.z_minus - 1e-12) or np.any(z > self.gap.z_plus + 1e-12):
            raise ValueError("point outside the gap")
        states, _ = transfer_batch(self.q, z, self.config)
        d = 0.5 * (states[:, 0] + states[:, 3])
        excess = self._sign * d - 1.0
        at_crit = np.abs(z - self.gap.z_crit) <= 1e-12
        if np.any((excess < EDGE_EXCESS_MIN) & ~at_crit):
            raise ValueError(
                "point too close to a gap edge; the gap function cannot be "
                "evaluated reliably there"
            )
        v, vp, vpp, _, _ = _v_from_states(states, self._sign)
        v = np.where(at_crit, self.gap.h, v)
        vp = np.where(at_crit, 0.0, vp)
        vpp = np.where(at_crit, self._vpp_crit, vpp)
        return v, vp, vpp

    def __call__(self, z):
        return self.eval(z)


def v_eval(q: FourierPotential, gap: Gap, z, config: IntegratorConfig = DEFAULT_CONFIG):
    """One-shot evaluation of (v, v', v'') on a gap."""
    return GapFunction(q, gap, config).eval(z)


@dataclass
class ActionSet:
    """Action variables A_n over |n| <= N (zero on closed gaps)."""

    N: int
    A: dict[int, float]
    a: dict[int, float]  # signed square roots; nonnegative branch
    quad_err: dict[int, float]

    def array(self) -> np.ndarray:
        return np.array([self.A[n] for n in range(-self.N, self.N + 1)])

    def l1(self) -> float:
        return float(np.sum(np.abs(self.array())))

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.array() ** 2)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.array()))) if self.A else 0.0


def action(
    q: FourierPotential,
    gap: Gap,
    config: IntegratorConfig = DEFAULT_CONFIG,
    quad_nodes: int = DEFAULT_QUAD_NODES,
) -> float:
    """Action A_n = (2/pi) * integral of v over one gap."""
    if gap.closed:
        return 0.0
    theta, weight = _gl_theta(quad_nodes)
    z = gap.midpoint + gap.radius * np.cos(theta)
    states, _ = transfer_batch(q, z, config)
    v, _, _, _, _ = _v_from_states(states, (-1.0) ** gap.n)
    v = _denoise_v(theta, v)
    return float(2.0 / np.pi * np.sum(weight * v * gap.radius * np.sin(theta)))


def compute_actions(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
) -> ActionSet:
    """All actions A_n, with per-gap quadrature error estimates.

    The error estimate is the difference against a half-resolution
    Gauss-Legendre rule; both rules converge spectrally, so the difference
    bounds the coarser one.  Also stores A_n on the table's Gap records.
    """
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    A, a, err = {}, {}, {}
    for g in table.gaps:
        if g.closed:
            A[g.n], a[g.n], err[g.n] = 0.0, 0.0, 0.0
            g.A = 0.0
            continue
        nd = nodes[g.n]
        val = (2.0 / np.pi) * nd.integrate(nd.v)
        val_h = (2.0 / np.pi) * nd.half_integral(nd.v_h)
        A[g.n] = val
        a[g.n] = float(np.sqrt(max(0.0, val)))
        err[g.n] = abs(val - val_h)
        g.A = val
    return ActionSet(N=table.N, A=A, a=a, quad_err=err)


def functionals_Q(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
) -> tuple[float, float, float]:
    """Moment functionals Q_j = (1/pi) * sum_gaps integral z^j v dz, j = 0, 1, 2."""
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    out = np.zeros(3)
    for nd in nodes.values():
        for j in range(3):
            out[j] += (1.0 / np.pi) * nd.integrate(nd.z**j * nd.v)
    return float(out[0]), float(out[1]), float(out[2])


def functional_V(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
) -> tuple[float, dict[int, float]]:
    """Cubic functional V = sum_n V_n, V_n = (8/(3*pi)) * integral v^3 dz."""
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    per_gap = {}
    for n, nd in nodes.items():
        per_gap[n] = (8.0 / (3.0 * np.pi)) * nd.integrate(nd.v**3)
    return float(sum(per_gap.values())), per_gap


def Y_and_derivatives(
    q: FourierPotential,
    table: SpectralTable,
    m: int,
    z,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
):
    """Relative correction Y_m and its two derivatives at points z in gap m.

    Y_m(z) = (1/pi) * sum_{n != m} integral_{g_n} v(t) dt / (|t - z| w_m(t))
    where w_m(t) = sqrt((t - z0_m)^2 - r_m^2) is the half-circle profile of
    gap m continued outside its gap.  Only the |t - z| factor depends on z,
    so the derivatives follow from differentiating that kernel alone.
    """
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    gm = table.gap(m)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    Y = np.zeros_like(z)
    Yp = np.zeros_like(z)
    Ypp = np.zeros_like(z)
    for n, nd in nodes.items():
        if n == m:
            continue
        t = nd.z
        w_m = np.sqrt((t - gm.midpoint) ** 2 - gm.radius**2)
        wv = nd.weight * nd.r * np.sin(nd.theta) * nd.v / w_m
        diff = t[None, :] - z[:, None]
        s = np.sign(diff)
        Y += (wv[None, :] * (s / diff)).sum(axis=1) / np.pi
        Yp += (wv[None, :] * (s / diff**2)).sum(axis=1) / np.pi
        Ypp += (wv[None, :] * (2.0 * s / diff**3)).sum(axis=1) / np.pi
    if Y.size == 1:
        return float(Y[0]), float(Yp[0]), float(Ypp[0])
    return Y, Yp, Ypp


def maxima_Y(
    q: FourierPotential,
    table: SpectralTable,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
    grid: int = 64,
):
    """Grid maxima (M_n, Mdot_n, Mddot_n) of |Y_n|, |Y_n'|, |Y_n''| per open gap.

    Returns (maxima, y_crit) where y_crit[n] = Y_n(z_crit).
    """
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    theta_g = np.pi * (np.arange(grid) + 0.5) / grid
    maxima = {}
    y_crit = {}
    for n, nd in nodes.items():
        zg = nd.z0 + nd.r * np.cos(theta_g)
        Y, Yp, Ypp = Y_and_derivatives(q, table, n, zg, config, nodes)
        Y = np.atleast_1d(Y)
        Yp = np.atleast_1d(Yp)
        Ypp = np.atleast_1d(Ypp)
        maxima[n] = (
            float(np.max(np.abs(Y))),
            float(np.max(np.abs(Yp))),
            float(np.max(np.abs(Ypp))),
        )
        yc, _, _ = Y_and_derivatives(q, table, n, nd.gap.z_crit, config, nodes)
        y_crit[n] = float(yc)
    return maxima, y_crit


def comparison_S(table: SpectralTable, actions: ActionSet = None) -> dict[int, float]:
    """Comparison series S_m = (1/(2 s^2)) * sum_{n != m} A_n / (n - m)^2.

    Uses the actions stored on the table's gaps unless an ActionSet is given;
    s is the smallest band width of the table.
    """
    if actions is not None:
        A = actions.A
    else:
        A = {g.n: (g.A if g.A is not None else 0.0) for g in table.gaps}
    s2 = table.s_min**2
    out = {}
    for m in range(-table.N, table.N + 1):
        acc = 0.0
        for n, An in A.items():
            if n != m:
                acc += An / (n - m) ** 2
        out[m] = acc / (2.0 * s2)
    return out


def same_gap_vprime_integral(nd: GapNodes) -> float:
    """(1/pi) * integral over the gap of v'(z)/(z_m - z) dz.

    The integrand has a removable singularity at the critical point with
    limit -v''(z_m); nodes inside CRIT_GUARD of z_crit use the limit.
    """
    zc = nd.gap.z_crit
    diff = zc - nd.z
    near = np.abs(diff) < CRIT_GUARD
    integrand = np.where(near, -nd.vpp_crit, nd.vp / np.where(near, 1.0, diff))
    return (1.0 / np.pi) * nd.integrate(integrand)


def cross_gap_inverse_square(nd: GapNodes, z_m: float) -> float:
    """(1/pi) * integral over this gap of v(t)/(t - z_m)^2 dt (z_m outside)."""
    return (1.0 / np.pi) * nd.integrate(nd.v / (nd.z - z_m) ** 2)


def iv1_terms(
    q: FourierPotential,
    table: SpectralTable,
    m: int,
    config: IntegratorConfig = None,
    nodes: dict[int, GapNodes] = None,
) -> tuple[float, float]:
    """Both sides of the normalization identity on gap m.

    lhs = (1/pi) * integral_{g_m} v'/(z_m - z) dz,
    rhs = 1 + (1/pi) * sum_{n != m} integral_{g_n} v/(t - z_m)^2 dt.
    """
    config = config or table.config
    if nodes is None:
        nodes = build_nodes(q, table, config)
    nd = nodes[m]
    lhs = same_gap_vprime_integral(nd)
    rhs = 1.0
    zc = nd.gap.z_crit
    for n, other in nodes.items():
        if n != m:
            rhs += cross_gap_inverse_square(other, zc)
    return lhs, rhs
