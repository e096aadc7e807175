"""Command-line surface: spectrum tables, verification reports, sweeps.

Exit codes: 0 success, 1 argument/file parse error, 2 numerical failure,
3 verification failure (identity or internal-consistency check failed;
inequality outcomes never affect the exit code).

The environment variable ZS_THREADS caps worker parallelism (0 or unset
means automatic).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import potential as potential_mod
from .gradients import DegenerateCriticalPointError, du_dA_and_frequencies
from .monodromy import IntegrationError, IntegratorConfig
from .potential import PRESET_NAMES, FourierPotential, direct_H0, preset
from .quasimomentum import build_nodes, compute_actions, functional_V
from .spectrum import GapLocationError, compute_table
from .verify import run_verification

SWEEP_CSV_VERSION = "sweep-csv-v1"
SPECTRUM_CSV_VERSION = "spectrum-csv-v1"
CHECKS_CSV_VERSION = "checks-csv-v1"

#: positional preset parameters accepted after "name:"
_PRESET_PARAMS = {
    "zero": (),
    "constant": ("c",),
    "single_mode": ("eps",),
    "two_mode": ("eps1", "eps2"),
    "random_small": ("bound",),
}

#: the single scalar a --amp value (or a sweep grid point) maps to
_AMP_PARAM = {
    "constant": "c",
    "single_mode": "eps",
    "two_mode": "eps1",
    "random_small": "bound",
}


class CliError(Exception):
    """Argument or input-file error (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


@dataclass
class RunConfig:
    n_max: int = 16
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    quad_nodes: int = 128
    gap_tol: float = 1e-9
    format: str = "json"
    out: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_max < 1:
            raise CliError("--n-max must be >= 1")
        if min(self.rel_tol, self.abs_tol, self.gap_tol) <= 0:
            raise CliError("tolerances must be positive")
        if self.quad_nodes < 4:
            raise CliError("--quad-nodes must be >= 4")

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol)


def _apply_thread_cap():
    raw = os.environ.get("ZS_THREADS", "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"ZS_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise CliError("ZS_THREADS must be >= 0")
    if n > 0:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _parse_preset(spec: str, seed: int, amp: float | None) -> FourierPotential:
    name, _, params = spec.partition(":")
    if name not in PRESET_NAMES:
        raise CliError(f"unknown preset {name!r}; choose from {sorted(PRESET_NAMES)}")
    keys = _PRESET_PARAMS[name]
    kwargs = {}
    if params:
        values = params.split(",")
        if len(values) > len(keys):
            raise CliError(f"preset {name} takes at most {len(keys)} parameters")
        for key, val in zip(keys, values):
            try:
                kwargs[key] = float(val)
            except ValueError:
                raise CliError(f"bad preset parameter {val!r} for {name}")
    if amp is not None:
        if name == "zero":
            raise CliError("the zero preset has no amplitude")
        kwargs[_AMP_PARAM[name]] = amp
    if name == "random_small":
        kwargs["seed"] = seed
    try:
        return preset(name, **kwargs)
    except ValueError as exc:
        raise CliError(str(exc))


def _load_potential(args, amp: float | None = None) -> FourierPotential:
    if args.potential is not None:
        try:
            return potential_mod.load(args.potential)
        except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read potential file {args.potential}: {exc}")
    if args.preset is not None:
        return _parse_preset(args.preset, args.seed, amp)
    raise CliError("one of --preset or --potential is required")


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spectrum_payload(q, table, actions):
    gaps = []
    for g in table.gaps:
        gaps.append(
            {
                "n": g.n,
                "z_minus": float(g.z_minus),
                "z_plus": float(g.z_plus),
                "z_crit": float(g.z_crit),
                "h": float(g.h),
                "A": float(actions.A[g.n]),
                "closed": bool(g.closed),
            }
        )
    return {
        "potential": potential_mod.to_dict(q),
        "table": {
            "N": table.N,
            "s_min": float(table.s_min),
            "tail_bound": float(table.tail_bound),
            "gaps": gaps,
        },
    }


def cmd_spectrum(args) -> int:
    q = _load_potential(args)
    cfg = _run_config(args)
    table = compute_table(q, cfg.n_max, cfg.integrator(), cfg.gap_tol)
    nodes = build_nodes(q, table, cfg.integrator(), cfg.quad_nodes)
    actions = compute_actions(q, table, cfg.integrator(), nodes)
    payload = _spectrum_payload(q, table, actions)
    if cfg.format == "json":
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", cfg.out)
    else:
        buf = io.StringIO()
        buf.write(f"# {SPECTRUM_CSV_VERSION}\n")
        writer = csv.writer(buf)
        writer.writerow(["n", "z_minus", "z_plus", "z_crit", "h", "A", "closed"])
        for g in payload["table"]["gaps"]:
            writer.writerow(
                [g["n"], repr(g["z_minus"]), repr(g["z_plus"]), repr(g["z_crit"]),
                 repr(g["h"]), repr(g["A"]), int(g["closed"])]
            )
        _emit(buf.getvalue(), cfg.out)
    return 0


def cmd_verify(args) -> int:
    q = _load_potential(args, args.amp)
    cfg = _run_config(args)
    report = run_verification(q, cfg.n_max, cfg.integrator(), cfg.quad_nodes,
                              cfg.gap_tol)
    if cfg.format == "json":
        _emit(report.to_json(), cfg.out)
    else:
        buf = io.StringIO()
        buf.write(f"# {CHECKS_CSV_VERSION}\n")
        writer = csv.writer(buf)
        writer.writerow(["name", "kind", "lhs", "rhs", "margin", "tolerance",
                         "holds", "notes"])
        for c in report.checks:
            writer.writerow([c.name, c.kind, repr(c.lhs), repr(c.rhs),
                             repr(c.margin), repr(c.tolerance), int(c.holds),
                             c.notes])
        _emit(buf.getvalue(), cfg.out)
    return 0 if report.overall_pass else 3


def _parse_grid(raw: str) -> list[float]:
    """Amplitude grid: comma-separated values or start..stop:count."""
    raw = raw.strip()
    if not raw:
        return []
    if ".." in raw:
        span, _, count = raw.partition(":")
        lo, _, hi = span.partition("..")
        try:
            n = int(count) if count else 5
            grid = np.linspace(float(lo), float(hi), n)
        except ValueError:
            raise CliError(f"bad amplitude range {raw!r}")
        return [float(x) for x in grid]
    try:
        return [float(x) for x in raw.split(",")]
    except ValueError:
        raise CliError(f"bad amplitude grid {raw!r}")


def cmd_sweep(args) -> int:
    if args.preset is None:
        raise CliError("sweep requires --preset (a preset family)")
    if args.amp is None:
        raise CliError("sweep requires --amp (the amplitude grid)")
    grid = _parse_grid(args.amp)
    if not grid:
        raise CliError("empty amplitude grid")
    if any(a <= 0 for a in grid) or any(
        b <= a for a, b in zip(grid, grid[1:])
    ):
        raise CliError("amplitude grid must be positive and strictly increasing")
    cfg = _run_config(args)
    rows = []
    for amp in grid:
        q = _parse_preset(args.preset, args.seed, amp)
        table = compute_table(q, cfg.n_max, cfg.integrator(), cfg.gap_tol)
        nodes = build_nodes(q, table, cfg.integrator(), cfg.quad_nodes)
        actions = compute_actions(q, table, cfg.integrator(), nodes)
        U, _ = functional_V(q, table, cfg.integrator(), nodes)
        h0 = direct_H0(q)
        l2 = actions.l2()
        if nodes:
            grads = du_dA_and_frequencies(q, table, cfg.integrator(), nodes)
            A_open = np.array([actions.A[n] for n in grads.open_idx])
            dev = float(np.linalg.norm(grads.dU_dA - 2.0 * A_open))
        else:
            dev = 0.0
        rows.append(
            [amp, h0, actions.l1(), U, l2**2, abs(U - l2**2),
             4.0 * np.pi * np.sqrt(3.0) * l2**3, dev,
             11.0 * np.pi**2 * actions.sup() * l2]
        )
    buf = io.StringIO()
    buf.write(f"# {SWEEP_CSV_VERSION}\n")
    writer = csv.writer(buf)
    writer.writerow(["amp", "H0", "sum_A", "U", "A_l2_sq", "TV_residual",
                     "TV_bound", "grad_deviation", "To_bound"])
    for row in rows:
        writer.writerow([repr(float(x)) for x in row])
    _emit(buf.getvalue(), cfg.out)
    return 0


def _run_config(args) -> RunConfig:
    return RunConfig(
        n_max=args.n_max,
        rel_tol=args.ode_rtol,
        abs_tol=args.ode_atol,
        quad_nodes=args.quad_nodes,
        gap_tol=args.gap_tol,
        format=args.format,
        out=args.out,
        seed=args.seed,
    )


def _add_common(sub):
    sub.add_argument("--preset", help="preset NAME[:params], e.g. constant:0.1")
    sub.add_argument("--potential", help="potential JSON file")
    sub.add_argument("--n-max", type=int, default=16)
    sub.add_argument("--ode-rtol", type=float, default=1e-11)
    sub.add_argument("--ode-atol", type=float, default=1e-13)
    sub.add_argument("--quad-nodes", type=int, default=128)
    sub.add_argument("--gap-tol", type=float, default=1e-9)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--amp", help="amplitude (verify) or amplitude grid (sweep)")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="zsactions", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)
    for name, fn in (("spectrum", cmd_spectrum), ("verify", cmd_verify),
                     ("sweep", cmd_sweep)):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _apply_thread_cap()
        if args.amp is not None and args.command != "sweep":
            try:
                args.amp = float(args.amp)
            except ValueError:
                raise CliError(f"bad --amp value {args.amp!r}")
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, GapLocationError, DegenerateCriticalPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
