"""Tests for the verification report and check suites."""

import json

import numpy as np

from zsactions.potential import preset
from zsactions.verify import run_verification


def _by_name(report):
    return {c.name: c for c in report.checks}


def test_constant_report_passes():
    rep = run_verification(preset("constant", c=0.1), N=4)
    assert rep.overall_pass
    checks = _by_name(rep)
    for name in ("A0_sum_rule", "A0_moment", "A1_sum_rule", "A1_moment",
                 "HQ_moment", "A22_energy_sum_rule"):
        assert checks[name].holds, name


def test_flagged_discrepancy_pair():
    """The printed action upper bound fails on the semicircle; the
    corrected-constant version passes; both carry the flagged kind."""
    rep = run_verification(preset("constant", c=0.1), N=4)
    checks = _by_name(rep)
    printed = checks["ea_upper_as_printed"]
    corrected = checks["ea_upper_corrected"]
    assert printed.kind == "flagged-discrepancy"
    assert corrected.kind == "flagged-discrepancy"
    assert not printed.holds
    assert corrected.holds
    # flagged outcomes never affect the overall verdict
    assert rep.overall_pass


def test_normalization_pin_strict_on_constant():
    rep = run_verification(preset("constant", c=0.1), N=4)
    pin = _by_name(rep)["A22_normalization_pin"]
    assert pin.lhs > pin.rhs  # half-normalized residual strictly larger


def test_zero_potential_report():
    rep = run_verification(preset("zero"), N=8)
    assert rep.overall_pass
    assert rep.functionals["U"] == 0.0
    assert all(g["closed"] for g in rep.to_dict()["table"]["gaps"])


def test_report_schema():
    rep = run_verification(preset("constant", c=0.1), N=2)
    d = rep.to_dict()
    assert set(d) == {"potential", "table", "functionals", "gradients",
                      "checks", "overall_pass"}
    assert set(d["table"]) == {"N", "s_min", "tail_bound", "gaps"}
    gap = d["table"]["gaps"][0]
    assert set(gap) == {"n", "z_minus", "z_plus", "z_crit", "h", "A", "closed"}
    assert set(d["functionals"]) == {"H0_direct", "H1_direct", "H_half",
                                     "H_double", "Q0", "Q1", "Q2", "U"}
    assert set(d["gradients"]) == {"nu", "alpha", "omega_tilde", "dU_dA",
                                   "Omega", "F_minus_I_HS"}
    check = d["checks"][0]
    assert set(check) == {"name", "kind", "lhs", "rhs", "margin", "tolerance",
                          "holds", "notes"}
    for c in d["checks"]:
        assert c["kind"] in ("identity", "inequality", "internal-consistency",
                             "flagged-discrepancy")
    json.dumps(d)  # must be JSON-serializable


def test_json_determinism():
    q = preset("random_small", seed=3)
    assert run_verification(q, N=8).to_json() == run_verification(q, N=8).to_json()


def test_overall_pass_ignores_inequalities():
    """Failing inequality checks do not change the verdict."""
    rep = run_verification(preset("constant", c=0.1), N=4)
    failing = [c for c in rep.checks if not c.holds]
    assert failing  # the as-printed bounds do fail on the semicircle
    assert all(c.kind in ("inequality", "flagged-discrepancy") for c in failing)
    assert rep.overall_pass


def test_sine_lemma_values():
    """Spot value: r = 0.5, z = 0.5 gives 2 sin(0.5) >= 1 - exp(-1)."""
    rep = run_verification(preset("zero"), N=2)
    sine = [c for c in rep.checks if c.name.startswith("sine_lower_bound")]
    assert len(sine) == 4
    assert all(c.holds for c in sine)
    assert 2 * np.sin(0.5) >= 1 - np.exp(-1.0)
