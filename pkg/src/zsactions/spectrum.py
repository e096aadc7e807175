"""Spectral gaps of the periodic problem from the discriminant Delta.

For small potentials every gap lies in its own window W_n = [pi*n - pi/2,
pi*n + pi/2].  Inside W_n the critical point z_n solves Delta'(z) = 0, the
gap height is cosh(h_n) = (-1)^n Delta(z_n), and the gap edges are the two
roots of (-1)^n Delta(z) = 1 around z_n.  All root solves are plain
bisections on sign changes, run in lockstep across gaps so that every
iteration is a single batched integrator call.

Closed-gap classification.  With integration noise eta ~ 1e-12 in Delta the
excess (-1)^n Delta(z_n) - 1 of a truly closed gap comes out anywhere in
[-eta, eta], so arccosh alone reports spurious heights up to sqrt(2*eta)
(about 1e-6).  A gap is therefore treated as closed when the excess is below
a noise floor (100x the relative step tolerance) or when the raw height is
below gap_tol; closed gaps report h = 0 and a point spectrum entry
z_minus = z_plus = z_crit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .monodromy import DEFAULT_CONFIG, IntegratorConfig, lyapunov_batch
from .potential import SMALL_NORM_BOUND, FourierPotential, fourier_coeff, norm

SCAN_POINTS = 64
BISECT_XTOL = 1e-12
EXCESS_FLOOR_FACTOR = 100.0


class GapLocationError(RuntimeError):
    """Raised when a window scan fails to bracket the expected roots."""


@dataclass
class Gap:
    """One spectral gap (or double point) with index n near pi*n."""

    n: int
    z_minus: float
    z_plus: float
    z_crit: float
    h: float
    closed: bool
    delta_crit: float = np.nan
    dd_delta_crit: float = np.nan
    A: float | None = None

    @property
    def width(self) -> float:
        return self.z_plus - self.z_minus

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.z_minus + self.z_plus)

    @property
    def radius(self) -> float:
        return 0.5 * (self.z_plus - self.z_minus)


@dataclass
class SpectralTable:
    """All gaps |n| <= N with truncation and band metadata."""

    N: int
    gaps: list[Gap]
    s_min: float
    eta: np.ndarray  # band widths minus pi, for bands n = -N+1 .. N
    tail_bound: float
    small_norm: bool
    gap_tol: float
    config: IntegratorConfig = field(default_factory=IntegratorConfig)

    def gap(self, n: int) -> Gap:
        return self.gaps[n + self.N]

    def open_gaps(self) -> list[Gap]:
        return [g for g in self.gaps if not g.closed]

    def open_indices(self) -> list[int]:
        return [g.n for g in self.gaps if not g.closed]


def _excess_floor(config: IntegratorConfig) -> float:
    return EXCESS_FLOOR_FACTOR * config.rel_tol


def _bisect_batch(f_batch, lo, hi, f_lo):
    """Lockstep bisection on sign changes; one batched call per iteration."""
    lo = lo.copy()
    hi = hi.copy()
    sign_lo = np.sign(f_lo)
    for _ in range(90):
        if np.max(hi - lo) <= BISECT_XTOL:
            break
        mid = 0.5 * (lo + hi)
        fm = f_batch(mid)
        left = np.sign(fm) == sign_lo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _scan_windows(q, ns, config):
    """Evaluate Delta and derivatives on SCAN_POINTS per window."""
    grids = np.stack(
        [np.linspace(np.pi * n - np.pi / 2, np.pi * n + np.pi / 2, SCAN_POINTS) for n in ns]
    )
    d, d1, d2, _ = lyapunov_batch(q, grids.ravel(), config)
    shape = grids.shape
    return grids, d.reshape(shape), d1.reshape(shape), d2.reshape(shape)


def _crit_brackets(grids, d1, ns):
    lo = np.empty(len(ns))
    hi = np.empty(len(ns))
    flo = np.empty(len(ns))
    for i, n in enumerate(ns):
        row = d1[i]
        idx = np.nonzero(row[:-1] * row[1:] < 0.0)[0]
        if idx.size == 0:
            on_grid = np.nonzero(row == 0.0)[0]
            if on_grid.size:
                j = on_grid[0]
                lo[i] = hi[i] = grids[i, j]
                flo[i] = 0.0
                continue
            raise GapLocationError(
                f"no critical point of Delta' found in window of gap n={n}"
            )
        # several sign changes can only happen outside the small-norm regime;
        # keep the bracket whose midpoint is closest to pi*n
        mids = 0.5 * (grids[i, idx] + grids[i, idx + 1])
        j = idx[np.argmin(np.abs(mids - np.pi * n))]
        lo[i], hi[i] = grids[i, j], grids[i, j + 1]
        flo[i] = row[j]
    return lo, hi, flo


def _locate(q, ns, config, gap_tol):
    """Shared implementation for locate_gap and compute_table."""
    grids, d, d1, _ = _scan_windows(q, ns, config)
    lo, hi, flo = _crit_brackets(grids, d1, ns)

    def dprime(zv):
        _, v1, _, _ = lyapunov_batch(q, zv, config)
        return v1

    z_crit = _bisect_batch(dprime, lo, hi, flo)
    dc, _, ddc, _ = lyapunov_batch(q, z_crit, config)
    signs = np.array([(-1.0) ** n for n in ns])
    excess = signs * dc - 1.0
    h_raw = np.arccosh(np.maximum(1.0, 1.0 + excess))
    floor = _excess_floor(config)
    closed = (excess < floor) | (h_raw < gap_tol)

    gaps = []
    open_pos = [i for i in range(len(ns)) if not closed[i]]
    if open_pos:
        e_lo = np.empty(len(open_pos))
        e_hi = np.empty(len(open_pos))
        e_flo = np.empty(len(open_pos))
        sub_signs = []
        for j, i in enumerate(open_pos):
            n = ns[i]
            f_row = signs[i] * d[i] - 1.0
            below_left = np.nonzero((grids[i] < z_crit[i]) & (f_row < -floor))[0]
            below_right = np.nonzero((grids[i] > z_crit[i]) & (f_row < -floor))[0]
            if below_left.size == 0 or below_right.size == 0:
                raise GapLocationError(
                    f"could not bracket the edges of open gap n={n}"
                )
            e_lo[j] = grids[i, below_left[-1]]
            e_hi[j] = grids[i, below_right[0]]
            e_flo[j] = -1.0  # f < 0 at the outer bracket ends
            sub_signs.append(signs[i])
        sub_signs = np.array(sub_signs)

        def edge_f(zv):
            v, _, _, _ = lyapunov_batch(q, zv, config)
            return sub_signs * v - 1.0

        zc_sub = z_crit[open_pos]
        z_left = _bisect_batch(edge_f, e_lo, zc_sub, e_flo)
        z_right = _bisect_batch(edge_f, zc_sub, e_hi, -e_flo)
    for i, n in enumerate(ns):
        if closed[i]:
            gaps.append(
                Gap(
                    n=n,
                    z_minus=z_crit[i],
                    z_plus=z_crit[i],
                    z_crit=z_crit[i],
                    h=0.0,
                    closed=True,
                    delta_crit=dc[i],
                    dd_delta_crit=ddc[i],
                    A=0.0,
                )
            )
        else:
            j = open_pos.index(i)
            gaps.append(
                Gap(
                    n=n,
                    z_minus=z_left[j],
                    z_plus=z_right[j],
                    z_crit=z_crit[i],
                    h=h_raw[i],
                    closed=False,
                    delta_crit=dc[i],
                    dd_delta_crit=ddc[i],
                )
            )
    return gaps


def locate_gap(
    q: FourierPotential,
    n: int,
    config: IntegratorConfig = DEFAULT_CONFIG,
    gap_tol: float = 1e-9,
) -> Gap:
    """Locate the single gap with index n.

    Valid in the small-norm regime ||q|| <= 1/8 where windows and gaps are in
    one-to-one correspondence; larger norms are attempted as-is and may raise
    GapLocationError.
    """
    return _locate(q, [n], config, gap_tol)[0]


def compute_table(
    q: FourierPotential,
    N: int,
    config: IntegratorConfig = DEFAULT_CONFIG,
    gap_tol: float = 1e-9,
) -> SpectralTable:
    """Locate all gaps |n| <= N and assemble band metadata.

    tail_bound collects the Fourier mass of the potential beyond the
    truncation index; identity checks widen their tolerance by a multiple of
    it.  s_min is the smallest band width (distance between consecutive
    gaps), and eta lists the band-width defects pi - |band|.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    ns = list(range(-N, N + 1))
    gaps = _locate(q, ns, config, gap_tol)
    bands = np.array(
        [gaps[i + 1].z_minus - gaps[i].z_plus for i in range(len(gaps) - 1)]
    )
    s_min = float(np.min(bands)) if bands.size else np.pi
    eta = np.pi - np.abs(bands)
    tail = 0.0
    for k in range(N + 1, q.k_max + 1):
        tail += abs(fourier_coeff(q, k)) ** 2 + abs(fourier_coeff(q, -k)) ** 2
    tail_bound = 1.5 * tail
    return SpectralTable(
        N=N,
        gaps=gaps,
        s_min=s_min,
        eta=eta,
        tail_bound=tail_bound,
        small_norm=bool(norm(q) <= SMALL_NORM_BOUND + 1e-12),
        gap_tol=gap_tol,
        config=config,
    )
