"""Identity, estimate and internal-consistency battery with a structured report.

Three suites:

* identities -- exact sum rules linking the direct integrals of the potential
  to spectral data (these must hold to quadrature accuracy and fail the run
  if violated);
* inequalities -- the a-priori estimate battery; these are data (reported,
  never fatal), including two flagged upper bounds whose printed constants
  are contradicted by the exact semicircle case;
* internal consistency -- dual-route quadrature identities and a sampled
  trigonometric lower bound; failures are fatal like identity failures.

Internal checks are evaluated on nodes rebuilt at a pinned tighter
integration tolerance so that a failure indicates a real inconsistency, not
integration noise; gaps too shallow for the gap function to be resolvable in
double precision (h below INTERNAL_H_MIN) are skipped with a note.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import potential as potential_mod
from .gradients import GradientData, du_dA_and_frequencies, nu_alpha
from .monodromy import DEFAULT_CONFIG, IntegratorConfig
from .potential import FourierPotential, direct_H, direct_H0, direct_H1, norm
from .quasimomentum import (
    ActionSet,
    GapFunction,
    Y_and_derivatives,
    build_nodes,
    comparison_S,
    compute_actions,
    functional_V,
    functionals_Q,
    iv1_terms,
    maxima_Y,
)
from .spectrum import SpectralTable, compute_table

#: additive slack on every inequality check
INEQ_SLACK = 1e-7

#: relative tolerance of internal dual-route quadrature identities
INTERNAL_REL_TOL = 1e-6

#: dual-route checks need the gap function resolvable well above the
#: discriminant noise floor: both the near-edge values of v and the edge
#: locations carry errors that grow like noise(Delta)/h^2, so the observed
#: dual-route residual scales like 1/h^2 (about 1.4e-6 at h = 2.6e-3);
#: h >= 1e-2 keeps it safely below the 1e-6 internal tolerance, and
#: shallower open gaps are skipped with a note
INTERNAL_H_MIN = 1e-2

#: integration tolerances pinned for the internal suite
INTERNAL_CONFIG_FLOOR = (1e-13, 1e-15)

_SINE_SEED = 20260823


@dataclass
class CheckResult:
    name: str
    kind: str  # identity | inequality | internal-consistency | flagged-discrepancy
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    holds: bool
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "tolerance": float(self.tolerance),
            "holds": bool(self.holds),
            "notes": self.notes,
        }


@dataclass
class VerificationReport:
    potential: dict
    table: SpectralTable
    functionals: dict
    grads: GradientData | None
    checks: list[CheckResult]
    overall_pass: bool = field(init=False)

    def __post_init__(self):
        self.overall_pass = all(
            c.holds
            for c in self.checks
            if c.kind in ("identity", "internal-consistency")
        )

    def to_dict(self) -> dict:
        gaps = [
            {
                "n": g.n,
                "z_minus": float(g.z_minus),
                "z_plus": float(g.z_plus),
                "z_crit": float(g.z_crit),
                "h": float(g.h),
                "A": float(g.A if g.A is not None else 0.0),
                "closed": bool(g.closed),
            }
            for g in self.table.gaps
        ]
        if self.grads is not None:
            gr = {
                "nu": [float(x) for x in self.grads.nu],
                "alpha": [float(x) for x in self.grads.alpha],
                "omega_tilde": [float(x) for x in self.grads.omega_tilde],
                "dU_dA": [float(x) for x in self.grads.dU_dA],
                "Omega": [float(x) for x in self.grads.Omega],
                "F_minus_I_HS": float(self.grads.F_minus_I_HS),
            }
        else:
            gr = {
                "nu": [],
                "alpha": [],
                "omega_tilde": [],
                "dU_dA": [],
                "Omega": [],
                "F_minus_I_HS": 0.0,
            }
        return {
            "potential": self.potential,
            "table": {
                "N": self.table.N,
                "s_min": float(self.table.s_min),
                "tail_bound": float(self.table.tail_bound),
                "gaps": gaps,
            },
            "functionals": self.functionals,
            "gradients": gr,
            "checks": [c.to_dict() for c in self.checks],
            "overall_pass": self.overall_pass,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _identity(name, lhs, rhs, tol, notes=""):
    margin = abs(lhs - rhs)
    return CheckResult(name, "identity", float(lhs), float(rhs), float(margin),
                       float(tol), bool(margin <= tol), notes)


def _ineq(name, lhs, rhs, notes="", kind="inequality", slack=INEQ_SLACK):
    """Check lhs <= rhs + slack."""
    margin = rhs - lhs
    return CheckResult(name, kind, float(lhs), float(rhs), float(margin),
                       float(slack), bool(lhs <= rhs + slack), notes)


def _internal(name, lhs, rhs, rel_tol=INTERNAL_REL_TOL, floor=0.0, notes=""):
    margin = abs(lhs - rhs)
    tol = rel_tol * max(abs(lhs), abs(rhs), floor)
    return CheckResult(name, "internal-consistency", float(lhs), float(rhs),
                       float(margin), float(tol), bool(margin <= tol), notes)


def _skipped(name, kind, notes):
    return CheckResult(name, kind, 0.0, 0.0, 0.0, 0.0, True, notes)


def _worst_ineq(name, pairs, notes="", kind="inequality", slack=INEQ_SLACK):
    """Aggregate per-gap inequalities, reporting the worst margin."""
    pairs = list(pairs)
    if not pairs:
        return _skipped(name, kind, "vacuous: no open gaps")
    worst = min(pairs, key=lambda t: t[1] - t[0])
    label = worst[2] if len(worst) > 2 else ""
    full_notes = notes if not label else (notes + " " if notes else "") + f"worst at {label}"
    return _ineq(name, worst[0], worst[1], full_notes.strip(), kind, slack)


def check_identities(q, table, actions, Qs, V_total, grads, config=None):
    """Sum rules (A0), (A1), (HQ), (A22) with tail-aware tolerances."""
    h0 = direct_H0(q)
    h1 = direct_H1(q)
    h_half, h_double = direct_H(q)
    Q0, Q1, Q2 = Qs
    tb = table.tail_bound
    tol = max(1e-8, 3.0 * tb)
    tol22 = max(1e-7, 3.0 * tb)
    ns = np.arange(-table.N, table.N + 1)
    A = actions.array()
    sum_A = float(np.sum(A))
    sum_2pin_A = float(np.sum(2.0 * np.pi * ns * A))
    sum_n2_A = float(np.sum((2.0 * np.pi * ns) ** 2 * A))
    rhs22 = sum_n2_A + 2.0 * h0**2 - V_total
    res_double = abs(h_double - rhs22)
    res_half = abs(h_half - rhs22)
    return [
        _identity("A0_sum_rule", h0, sum_A, tol, "L2 norm equals the action sum"),
        _identity("A0_moment", h0, 2.0 * Q0, tol, "L2 norm equals 2*Q0"),
        _identity("A1_sum_rule", h1, sum_2pin_A, tol,
                  "momentum equals the weighted action sum"),
        _identity("A1_moment", h1, 4.0 * Q1, tol, "momentum equals 4*Q1"),
        _identity("HQ_moment", h_double, 8.0 * Q2, tol,
                  "energy integral equals 8*Q2"),
        _identity("A22_energy_sum_rule", h_double, rhs22, tol22,
                  "energy equals sum((2*pi*n)^2 A_n) + 2*H0^2 - U "
                  "(plain-integral normalization)"),
        CheckResult(
            "A22_normalization_pin", "internal-consistency",
            float(res_half), float(res_double), float(res_half - res_double),
            0.0, bool(res_half >= res_double),
            "the half-normalized energy candidate must not fit the sum rule "
            "better than the plain integral",
        ),
    ]


def _pe2_grid_sup(table, nodes, m, grid=64):
    """sup over a z-grid in gap m of (1/pi) * sum_{n != m} int v/(t-z)^2 dt."""
    nd = nodes[m]
    theta = np.pi * (np.arange(grid) + 0.5) / grid
    zg = nd.z0 + nd.r * np.cos(theta)
    acc = np.zeros_like(zg)
    for n, other in nodes.items():
        if n == m:
            continue
        kern = other.v[None, :] / (other.z[None, :] - zg[:, None]) ** 2
        w = other.weight * other.r * np.sin(other.theta)
        acc += (kern * w[None, :]).sum(axis=1) / np.pi
    return float(np.max(acc))


def check_estimates(q, table, actions, V_data, grads, S, maxima, y_crit,
                    nodes=None, config=None):
    """The inequality battery; data only, never fatal.

    Checks conditioned on the small-norm regime are skipped with a note when
    ||q|| > 1/8.  Suprema are grid maxima (lower bounds of the true suprema).
    """
    V_total, V_per = V_data
    checks = []
    h0 = direct_H0(q)
    q_norm = norm(q)
    A = actions.array()
    l1, l2, supA = actions.l1(), actions.l2(), actions.sup()
    U = V_total
    open_gaps = table.open_gaps()
    small = table.small_norm
    skip_note = "skipped: ||q|| > 1/8 (outside the conditioned regime)"

    # Theorem-level functional bounds
    checks.append(_ineq("eV_lower", 0.0, U, "U is nonnegative"))
    checks.append(_ineq("eV_upper", U, (4.0 / 3.0) * l1**2))
    C1 = max(2.0, np.cosh(0.5 * np.pi * supA))
    checks.append(_ineq("eV1_lower", (np.pi / 6.0) * l2**2, U))
    checks.append(_ineq("eV1_upper", U, (2.0 * np.pi / 3.0) * np.sqrt(C1) * l2**2))
    checks.append(_ineq("TV_cubic_remainder", abs(U - l2**2),
                        4.0 * np.pi * np.sqrt(3.0) * l2**3))
    if grads is not None and small:
        dU = grads.dU_dA
        A_open = np.array([actions.A[n] for n in grads.open_idx])
        dev = float(np.linalg.norm(dU - 2.0 * A_open))
        checks.append(_ineq("To_gradient_deviation", dev,
                            11.0 * np.pi**2 * supA * l2))
    else:
        checks.append(_skipped("To_gradient_deviation", "inequality",
                               skip_note if small is False else
                               "vacuous: no open gaps"))

    # per-gap action bounds (ea), with the printed upper bound flagged
    checks.append(_worst_ineq(
        "ea_lower_width",
        [(g.width**2 / 4.0, actions.A[g.n], f"n={g.n}") for g in open_gaps],
        "A_n >= |g|^2/4"))
    checks.append(_worst_ineq(
        "ea_lower_height",
        [(g.width * g.h / np.pi, actions.A[g.n], f"n={g.n}") for g in open_gaps],
        "A_n >= |g| h/pi"))
    checks.append(_worst_ineq(
        "ea_upper_as_printed",
        [(actions.A[g.n], g.width * g.h / np.pi, f"n={g.n}") for g in open_gaps],
        "printed constant 1/pi; contradicted by the exact semicircle case",
        kind="flagged-discrepancy"))
    checks.append(_worst_ineq(
        "ea_upper_corrected",
        [(actions.A[g.n], 2.0 * g.width * g.h / np.pi, f"n={g.n}") for g in open_gaps],
        "corrected constant 2/pi, forced by v <= h",
        kind="flagged-discrepancy"))
    checks.append(_worst_ineq(
        "ea_chain_height",
        [(g.width * g.h / np.pi, 2.0 * g.h**2 / np.pi, f"n={g.n}") for g in open_gaps],
        "|g| h/pi <= 2 h^2/pi"))

    # height/edge comparisons
    if grads is not None:
        nu_pairs = [(grads.nu[i] ** 2, table.gap(n).h ** 2, f"n={n}")
                    for i, n in enumerate(grads.open_idx)]
        checks.append(_worst_ineq("em1_nu_le_h", nu_pairs))
    else:
        checks.append(_skipped("em1_nu_le_h", "inequality", "vacuous: no open gaps"))
    checks.append(_worst_ineq(
        "em1_h_le_H0", [(g.h**2, h0, f"n={g.n}") for g in open_gaps]))
    checks.append(_worst_ineq(
        "em2_width_le_2h", [(g.width, 2.0 * g.h, f"n={g.n}") for g in open_gaps]))

    # norm comparisons (ae1)-(ae3)
    h_l2 = float(np.sqrt(sum(g.h**2 for g in table.gaps)))
    g_l2 = float(np.sqrt(sum(g.width**2 for g in table.gaps)))
    eta_l2 = float(np.sqrt(np.sum(np.maximum(0.0, table.eta) ** 2)))
    checks.append(_ineq("ae1_lower", 0.5 * q_norm, h_l2))
    checks.append(_ineq("ae1_upper", h_l2, 3.0 * np.sqrt(1.0 + q_norm) * q_norm))
    checks.append(_ineq("ae2_lower", 0.5 * g_l2, q_norm))
    checks.append(_ineq("ae2_upper", q_norm, 2.0 * g_l2 * (1.0 + g_l2)))
    checks.append(_ineq(
        "ae3_band_defects", eta_l2,
        16.0 * min(q_norm, h_l2, g_l2 * (1.0 + g_l2)),
        "truncated eta sequence (|n| <= N)"))

    S_arr = np.array([S[m] for m in range(-table.N, table.N + 1)])
    if small:
        checks.append(_ineq("pe1_band_length", 1.0, table.s_min,
                            "s_min >= 1 in the small-norm regime"))
        checks.append(_worst_ineq(
            "pe1_gap_width", [(g.width, 0.25, f"n={g.n}") for g in open_gaps]))
        if nodes:
            checks.append(_worst_ineq(
                "pe2_cross_kernel_sup",
                [(_pe2_grid_sup(table, nodes, m), S[m], f"n={m}") for m in nodes],
                "grid supremum"))
        checks.append(_worst_ineq(
            "pe3_M_bounds",
            [(max(maxima[n]), S[n], f"n={n}") for n in maxima],
            "max of (M, Mdot, Mddot) per gap vs S_n, grid suprema"))
        checks.append(_ineq("pe4_S_sup", float(np.max(S_arr, initial=0.0)), h0 / 2.0))
        checks.append(_ineq("pe4_S_l2", float(np.linalg.norm(S_arr)),
                            (np.pi**2 / 6.0) * l2))
        checks.append(_ineq("pe4_S_l1", float(np.sum(S_arr)),
                            (np.pi**2 / 6.0) * h0))
    else:
        for nm in ("pe1_band_length", "pe1_gap_width", "pe2_cross_kernel_sup",
                   "pe3_M_bounds", "pe4_S_sup", "pe4_S_l2", "pe4_S_l1"):
            checks.append(_skipped(nm, "inequality", skip_note))

    # height-edge refinements with Y maxima
    if maxima:
        checks.append(_worst_ineq(
            "esA1_height_vs_width",
            [(2.0 * table.gap(n).h, table.gap(n).width * (1.0 + maxima[n][0]),
              f"n={n}") for n in maxima]))
        checks.append(_worst_ineq(
            "esA2_lower",
            [(table.gap(n).width ** 2 / 4.0, actions.A[n], f"n={n}")
             for n in maxima]))
        checks.append(_worst_ineq(
            "esA2_upper",
            [(actions.A[n] - table.gap(n).width ** 2 / 4.0,
              (table.gap(n).width ** 2 / 4.0) * maxima[n][0], f"n={n}")
             for n in maxima]))
        if grads is not None:
            esa4 = []
            for i, n in enumerate(grads.open_idx):
                g = table.gap(n)
                M, Md, Mdd = maxima[n]
                rhs = 4.0 * g.h * M + g.h * (g.width**2 / 4.0) * (
                    3.0 * (1.0 + g.width / 2.0) * Md**2 + Mdd)
                esa4.append((abs(g.h - grads.nu[i]), rhs, f"n={n}"))
            checks.append(_worst_ineq("esA4_h_vs_nu", esa4))
        pe5 = []
        pe6 = []
        pe7 = []
        for n in maxima:
            g = table.gap(n)
            M, Md, Mdd = maxima[n]
            pe5.append((abs(2.0 * g.h - g.width * (1.0 + y_crit[n])),
                        (g.width**3 / 8.0) * Md**2, f"n={n}"))
            pe6.append((abs(actions.A[n] - g.width * g.h / 4.0),
                        (g.width**4 / 2.0**7) * (Mdd + 6.0 * Md**2), f"n={n}"))
            pe7.append((abs(g.z_crit - g.midpoint),
                        (g.width**2 / 4.0) * Md, f"n={n}"))
        checks.append(_worst_ineq("pe5_height_reconstruction", pe5))
        checks.append(_worst_ineq(
            "pe6_action_as_printed", pe6,
            "printed |g| h/4 term; fails on the exact semicircle "
            "(|g|^2/4 would be consistent with esA2)"))
        checks.append(_worst_ineq("pe7_crit_vs_midpoint", pe7))
    else:
        for nm in ("esA1_height_vs_width", "esA2_lower", "esA2_upper",
                   "esA4_h_vs_nu", "pe5_height_reconstruction",
                   "pe6_action_as_printed", "pe7_crit_vs_midpoint"):
            checks.append(_skipped(nm, "inequality", "vacuous: no open gaps"))

    # cubic functional bounds
    checks.append(_worst_ineq(
        "vn_cubic_upper",
        [(V_per[n], (4.0 / 3.0) * table.gap(n).h ** 2 * actions.A[n], f"n={n}")
         for n in V_per]))
    checks.append(_worst_ineq(
        "l321_first_as_printed",
        [(actions.A[n] * table.gap(n).h ** 2 / 3.0,
          table.gap(n).width * table.gap(n).h ** 3 / (3.0 * np.pi), f"n={n}")
         for n in V_per],
        "printed chain head; fails on the exact semicircle"))
    checks.append(_worst_ineq(
        "l321_second",
        [(table.gap(n).width * table.gap(n).h ** 3 / (3.0 * np.pi), V_per[n],
          f"n={n}") for n in V_per]))
    sum_Ah2 = sum(actions.A[g.n] * g.h**2 for g in open_gaps)
    checks.append(_ineq("l322_lower", sum_Ah2 / 3.0, V_total))
    checks.append(_ineq("l322_upper", V_total, (4.0 / 3.0) * sum_Ah2))
    sup_h = max((g.h for g in open_gaps), default=0.0)
    C0 = float(np.cosh(sup_h))
    checks.append(_worst_ineq(
        "l323_cosh_height",
        [(np.cosh(g.h) - 1.0, C0 * g.width**2 / 8.0, f"n={g.n}")
         for g in open_gaps]))
    checks.append(_worst_ineq(
        "l324_height_vs_width",
        [(g.h, 0.5 * np.sqrt(C0) * g.width, f"n={g.n}") for g in open_gaps]))
    if C0 >= 2.0:
        pairs = [(2.0, g.width, f"n={g.n}") for g in open_gaps if g.h == sup_h]
        checks.append(_worst_ineq("l325_large_height", pairs,
                                  "C0 >= 2 forces a wide gap"))
    else:
        checks.append(_skipped("l325_large_height", "inequality",
                               "vacuously true: C0 < 2"))
    checks.append(_ineq("l326_C0_le_C1", C0, C1))

    # gradient-side bounds
    if grads is not None and nodes:
        idx = grads.open_idx
        checks.append(_worst_ineq(
            "TgH6_same_gap",
            [(abs(2.0 * table.gap(n).h * grads.omega_tilde_1[i]),
              9.0 * table.gap(n).h ** 3, f"n={n}") for i, n in enumerate(idx)]))
        cross = []
        for i, m in enumerate(idx):
            zm = table.gap(m).z_crit
            for n in idx:
                if n == m:
                    continue
                nd = nodes[n]
                val = (8.0 * abs(grads.nu[i]) / (3.0 * np.pi)) * nd.integrate(
                    nd.v**3 / (nd.z - zm) ** 2)
                bound = (4.0 / 3.0) * table.gap(m).h * table.gap(n).h ** 2 * \
                    actions.A[n] / (n - m) ** 2
                cross.append((val, bound, f"m={m},n={n}"))
        checks.append(_worst_ineq("TgH6_cross_gap", cross))
        if small:
            f32 = []
            dw2a, dw2b, dw3a, dw3b, dw4a, dw5 = [], [], [], [], [], []
            for i, m in enumerate(idx):
                g = table.gap(m)
                w1, w2 = grads.omega_tilde_1[i], grads.omega_tilde_2[i]
                Am = actions.A[m]
                f32.append((abs(2.0 * g.h * w2),
                            3.0 * abs(grads.nu[i]) * supA * S[m], f"n={m}"))
                dw2a.append((w2, 4.5 * g.h**2, f"n={m}"))
                dw2b.append((w2, 1.5 * supA * S[m], f"n={m}"))
                dw3a.append((abs(w1 - 2.0 * Am), 29.0 * Am * S[m], f"n={m}"))
                dw3b.append((abs(w1 - 2.0 * Am), Am / 4.0, f"n={m}"))
                dw4a.append((abs(w1 - w2), 3.0 * Am + 2.0 * supA * S[m], f"n={m}"))
                dw5.append((abs(w1 - w2 - 2.0 * Am), 31.0 * supA * S[m], f"n={m}"))
            checks.append(_worst_ineq(
                "l32_remainder", f32, "f_m = 2 h_m omega2_m"))
            checks.append(_worst_ineq(
                "dw2_same_index", dw2a,
                "printed with index n on the right; read as m"))
            checks.append(_worst_ineq("dw2_vs_S", dw2b))
            checks.append(_worst_ineq("dw3_vs_S", dw3a))
            checks.append(_worst_ineq("dw3_quarter", dw3b))
            checks.append(_worst_ineq("dw4_componentwise", dw4a))
            checks.append(_ineq("dw4_sup",
                                float(np.max(np.abs(grads.omega_tilde),
                                             initial=0.0)),
                                4.0 * supA))
            checks.append(_worst_ineq("dw5_vs_S", dw5))
            tda1 = []
            for i, m in enumerate(idx):
                for j, n in enumerate(idx):
                    if m == n:
                        continue
                    tda1.append((abs(grads.F[i, j]),
                                 actions.A[n] / (2.0 * (n - m) ** 2),
                                 f"m={m},n={n}"))
            checks.append(_worst_ineq("TdA1_offdiag", tda1))
            checks.append(_worst_ineq(
                "TdA2_diag",
                [(abs(grads.F[i, i] - 1.0), 5.0 * S[n], f"n={n}")
                 for i, n in enumerate(idx)]))
            checks.append(_ineq("TdA3_HS_norm", grads.F_minus_I_HS,
                                np.pi * q_norm**2))
            checks.append(_worst_ineq(
                "TdA4_alpha",
                [(abs(grads.alpha[i] - 1.0), 5.0 * S[n], f"n={n}")
                 for i, n in enumerate(idx)]))
            iv1b = []
            for m in nodes:
                lhs, rhs = iv1_terms(q, table, m, nodes=nodes)
                iv1b.append((lhs, 1.0 + S[m], f"n={m}"))
            checks.append(_worst_ineq("iv1_upper_bound", iv1b))
        else:
            for nm in ("l32_remainder", "dw2_same_index", "dw2_vs_S",
                       "dw3_vs_S", "dw3_quarter", "dw4_componentwise",
                       "dw4_sup", "dw5_vs_S", "TdA1_offdiag", "TdA2_diag",
                       "TdA3_HS_norm", "TdA4_alpha", "iv1_upper_bound"):
                checks.append(_skipped(nm, "inequality", skip_note))
    if y_crit:
        checks.append(_worst_ineq(
            "idv1_Y_nonnegative",
            [(0.0, y_crit[n], f"n={n}") for n in y_crit],
            "Y_n(z_crit) >= 0", slack=1e-12))
    return checks


def _sine_lemma_checks():
    """Sampled lower bound 2|sin z| >= exp(|Im z|)(1 - exp(-2r))."""
    rng = np.random.default_rng(_SINE_SEED)
    out = []
    for r in (0.1, 0.5, 1.0, np.pi / 2):
        pts = []
        while len(pts) < 1000:
            x = rng.uniform(-4.0 * np.pi, 4.0 * np.pi, size=4000)
            y = rng.uniform(-5.0, 5.0, size=4000)
            dist = np.abs(x - np.pi * np.round(x / np.pi))
            keep = np.hypot(dist, y) >= r
            pts.extend(zip(x[keep], y[keep]))
        x = np.array([p[0] for p in pts[:1000]])
        y = np.array([p[1] for p in pts[:1000]])
        lhs = 2.0 * np.abs(np.sin(x + 1j * y))
        rhs = np.exp(np.abs(y)) * (1.0 - np.exp(-2.0 * r))
        i = int(np.argmin(lhs - rhs))
        out.append(CheckResult(
            f"sine_lower_bound_r_{r:.6g}", "internal-consistency",
            float(lhs[i]), float(rhs[i]), float(lhs[i] - rhs[i]), 0.0,
            bool(np.all(lhs >= rhs)),
            "1000 sampled points with dist(z, pi*Z) >= r, |Im z| <= 5",
        ))
    return out


def check_internal(q, table, actions, grads, config=None):
    """Dual-route quadrature identities at pinned tight tolerance."""
    config = config or table.config
    tight = IntegratorConfig(
        rel_tol=min(config.rel_tol, INTERNAL_CONFIG_FLOOR[0]),
        abs_tol=min(config.abs_tol, INTERNAL_CONFIG_FLOOR[1]),
        max_steps=config.max_steps,
    )
    checks = []
    checked = [g.n for g in table.open_gaps() if g.h >= INTERNAL_H_MIN]
    skipped = [g.n for g in table.open_gaps() if g.h < INTERNAL_H_MIN]
    note_sk = (f"gaps {skipped} skipped (h < {INTERNAL_H_MIN:g}, below the "
               "double-precision resolvability of v)") if skipped else ""
    if checked:
        nodes = build_nodes(q, table, tight)
        sub = {n: nodes[n] for n in checked}
        # (iv1+) equality per gap
        pairs = []
        for m in checked:
            lhs, rhs = iv1_terms(q, table, m, nodes=nodes)
            pairs.append((m, lhs, rhs))
        worst = max(pairs, key=lambda t: abs(t[1] - t[2]))
        checks.append(_internal(
            "iv1_dual_route", worst[1], worst[2], floor=1.0,
            notes=(f"worst at n={worst[0]}; " + note_sk).strip("; ")))
        # action-derivative dual route over all ordered pairs
        if len(checked) > 1:
            from .gradients import action_derivative_crosscheck

            worst_rel, worst_info = -1.0, None
            for m in checked:
                for n in checked:
                    if m == n:
                        continue
                    lhs, rhs = action_derivative_crosscheck(
                        q, table, m, n, nodes=sub)
                    tol_mn = max(1e-7 * abs(lhs), 1e-12)
                    rel = abs(lhs - rhs) / tol_mn
                    if rel > worst_rel:
                        worst_rel, worst_info = rel, (m, n, lhs, rhs, tol_mn)
            m, n, lhs, rhs, tol_mn = worst_info
            res = CheckResult(
                "action_derivative_dual_route", "internal-consistency",
                float(lhs), float(rhs), float(abs(lhs - rhs)), float(tol_mn),
                bool(abs(lhs - rhs) <= tol_mn),
                ("1e-7 relative with 1e-12 absolute floor; "
                 f"worst ordered pair m={m}, n={n}; " + note_sk).strip("; "))
            checks.append(res)
        else:
            checks.append(_skipped("action_derivative_dual_route",
                                   "internal-consistency",
                                   "vacuous: fewer than two resolvable gaps"))
        # (idv1) reconstruction at 10 interior points per gap
        idv1_gaps = checked
        worst_res, worst_n = 0.0, None
        for m in idv1_gaps:
            g = table.gap(m)
            theta = 0.25 * np.pi + 0.5 * np.pi * (np.arange(10) + 0.5) / 10.0
            z = g.midpoint + g.radius * np.cos(theta)
            gf = GapFunction(q, g, tight)
            v_direct, _, _ = gf.eval(z)
            v_half = np.sqrt(np.maximum(0.0, g.radius**2 - (z - g.midpoint) ** 2))
            Y, _, _ = Y_and_derivatives(q, table, m, z, tight, nodes)
            recon = v_half * (1.0 + np.atleast_1d(Y))
            res = float(np.max(np.abs(v_direct - recon) / np.abs(v_direct)))
            if res > worst_res:
                worst_res, worst_n = res, m
        checks.append(CheckResult(
            "idv1_reconstruction", "internal-consistency",
            float(worst_res), 0.0, float(worst_res), INTERNAL_REL_TOL,
            bool(worst_res <= INTERNAL_REL_TOL),
            (f"max relative residual of v = v_n(1+Y_n) over 10 points "
             f"across the middle half of each gap, worst at n={worst_n}; "
             + note_sk).strip("; ")))
        # nu * v''(z_crit) = -1
        nu_d, _ = nu_alpha(q, table)
        worst_dev, worst_n, worst_prod = -1.0, None, -1.0
        for m in checked:
            g = table.gap(m)
            gf = GapFunction(q, g, tight)
            _, _, vpp = gf.eval(g.z_crit)
            prod = nu_d[m] * float(np.asarray(vpp).reshape(-1)[0])
            dev = abs(prod + 1.0)
            if dev > worst_dev:
                worst_dev, worst_n, worst_prod = dev, m, prod
        checks.append(CheckResult(
            "nu_vpp_link", "internal-consistency",
            float(worst_prod), -1.0, float(worst_dev),
            INTERNAL_REL_TOL, bool(worst_dev <= INTERNAL_REL_TOL),
            f"nu_m * v''(z_m) vs -1, worst at n={worst_n}"))
    else:
        for nm in ("iv1_dual_route", "action_derivative_dual_route",
                   "idv1_reconstruction", "nu_vpp_link"):
            checks.append(_skipped(nm, "internal-consistency",
                                   "vacuous: no resolvable open gaps"))
    if grads is not None and grads.open_idx:
        w_norm = float(np.linalg.norm(grads.omega_tilde))
        checks.append(CheckResult(
            "lu_solve_residual", "internal-consistency",
            float(grads.solve_residual), float(1e-12 * w_norm),
            float(grads.solve_residual), float(1e-12 * max(w_norm, 1e-300)),
            bool(grads.solve_residual <= 1e-12 * max(w_norm, 1e-300)),
            "||F x - omega_tilde|| vs 1e-12 ||omega_tilde||"))
    checks.extend(_sine_lemma_checks())
    return checks


def run_verification(
    q: FourierPotential,
    N: int = 16,
    config: IntegratorConfig = DEFAULT_CONFIG,
    quad_nodes: int = 128,
    gap_tol: float = 1e-9,
) -> VerificationReport:
    """Full pipeline: table, actions, functionals, gradients, all checks."""
    table = compute_table(q, N, config, gap_tol)
    nodes = build_nodes(q, table, config, quad_nodes)
    actions = compute_actions(q, table, config, nodes)
    Qs = functionals_Q(q, table, config, nodes)
    V_total, V_per = functional_V(q, table, config, nodes)
    if nodes:
        grads = du_dA_and_frequencies(q, table, config, nodes)
        maxima, y_crit = maxima_Y(q, table, config, nodes)
    else:
        grads, maxima, y_crit = None, {}, {}
    S = comparison_S(table, actions)
    checks = []
    checks.extend(check_identities(q, table, actions, Qs, V_total, grads, config))
    checks.extend(check_estimates(q, table, actions, (V_total, V_per), grads,
                                  S, maxima, y_crit, nodes, config))
    checks.extend(check_internal(q, table, actions, grads, config))
    h_half, h_double = direct_H(q)
    functionals = {
        "H0_direct": float(direct_H0(q)),
        "H1_direct": float(direct_H1(q)),
        "H_half": float(h_half),
        "H_double": float(h_double),
        "Q0": float(Qs[0]),
        "Q1": float(Qs[1]),
        "Q2": float(Qs[2]),
        "U": float(V_total),
    }
    return VerificationReport(
        potential=potential_mod.to_dict(q),
        table=table,
        functionals=functionals,
        grads=grads,
        checks=checks,
    )
