"""Periodic two-component potentials as real trigonometric polynomials.

A potential q = (q1, q2) is stored by cosine/sine coefficients,

    q_j(x) = a_j[0] + sum_{k=1..k_max} (a_j[k] cos(2*pi*k*x) + b_j[k] sin(2*pi*k*x)),

on the unit circle x in [0, 1).  Keeping q a finite trigonometric polynomial
makes every direct integral (L2 norm, momentum, energy) exact from the
coefficients or spectrally exact at a known finite number of equispaced
quadrature nodes, and keeps the Fourier tail explicitly zero beyond k_max.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

#: largest L2 norm for which the per-window gap labeling in `spectrum` is valid
SMALL_NORM_BOUND = 0.125

PRESET_NAMES = ("zero", "constant", "single_mode", "two_mode", "random_small")


@dataclass(frozen=True)
class FourierPotential:
    """Real trigonometric-polynomial potential (q1, q2).

    Coefficient arrays all have length k_max + 1 and are indexed by the
    harmonic number; the sine arrays carry a structural zero at index 0.
    """

    k_max: int
    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        if self.k_max < 0:
            raise ValueError("k_max must be nonnegative")
        for name in ("a1", "b1", "a2", "b2"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            if arr.shape != (self.k_max + 1,):
                raise ValueError(
                    f"{name} must have length k_max+1={self.k_max + 1}, got {arr.shape}"
                )
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.b1[0] != 0.0 or self.b2[0] != 0.0:
            raise ValueError("sine coefficients start at harmonic 1 (b[0] must be 0)")

    def eval(self, x):
        """Evaluate (q1, q2) at x (scalar or array), x interpreted mod 1."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.k_max + 1)
        ang = TWO_PI * np.multiply.outer(x, k)
        c, s = np.cos(ang), np.sin(ang)
        q1 = self.a1[0] + c @ self.a1[1:] + s @ self.b1[1:]
        q2 = self.a2[0] + c @ self.a2[1:] + s @ self.b2[1:]
        return q1, q2

    def eval_deriv(self, x):
        """Evaluate (q1', q2') at x."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.k_max + 1)
        ang = TWO_PI * np.multiply.outer(x, k)
        c, s = np.cos(ang), np.sin(ang)
        w = TWO_PI * k
        d1 = c @ (w * self.b1[1:]) - s @ (w * self.a1[1:])
        d2 = c @ (w * self.b2[1:]) - s @ (w * self.a2[1:])
        return d1, d2


def direct_H0(q: FourierPotential) -> float:
    """L2 norm squared, exactly from the coefficients (Parseval)."""
    h0 = q.a1[0] ** 2 + q.a2[0] ** 2
    h0 += 0.5 * float(
        np.sum(q.a1[1:] ** 2 + q.b1[1:] ** 2 + q.a2[1:] ** 2 + q.b2[1:] ** 2)
    )
    return h0


def direct_H1(q: FourierPotential) -> float:
    """Momentum integral of (q2' q1 - q1' q2), exactly from the coefficients.

    The bilinear form reduces to sum_k 2*pi*k*(a1[k] b2[k] - a2[k] b1[k]).
    """
    k = np.arange(1, q.k_max + 1)
    return float(np.sum(TWO_PI * k * (q.a1[1:] * q.b2[1:] - q.a2[1:] * q.b1[1:])))


def direct_H(q: FourierPotential) -> tuple[float, float]:
    """Energy integral of |q'|^2 + |q|^4 in both normalizations.

    Returns (h_half, h_double) where h_half carries the 1/2 prefactor and
    h_double = 2*h_half is the plain integral.  Equispaced trapezoid with
    4*k_max + 8 nodes is exact for the degree-(4*k_max) trigonometric
    integrand.
    """
    n = 4 * q.k_max + 8
    x = np.arange(n) / n
    q1, q2 = q.eval(x)
    d1, d2 = q.eval_deriv(x)
    h_double = float(np.mean(d1**2 + d2**2 + (q1**2 + q2**2) ** 2))
    return 0.5 * h_double, h_double


def fourier_coeff(q: FourierPotential, n: int) -> complex:
    """Coefficient of exp(2*pi*i*n*x) of the complexified potential q1 + i*q2."""
    if abs(n) > q.k_max:
        return 0.0 + 0.0j
    if n == 0:
        return complex(q.a1[0], q.a2[0])
    k = abs(n)
    if n > 0:
        return complex(q.a1[k] + q.b2[k], q.a2[k] - q.b1[k]) / 2.0
    return complex(q.a1[k] - q.b2[k], q.a2[k] + q.b1[k]) / 2.0


def norm(q: FourierPotential) -> float:
    """L2 norm of the potential."""
    return float(np.sqrt(direct_H0(q)))


def _coeffs(k_max):
    return [np.zeros(k_max + 1) for _ in range(4)]


def preset(name: str, **params) -> FourierPotential:
    """Build one of the named deterministic potentials.

    zero                  -- identically zero
    constant (c)          -- q1 = c
    single_mode (eps)     -- q1 = eps*cos(2*pi*x)
    two_mode (eps1, eps2) -- q1 = eps1*cos(2*pi*x), q2 = eps2*sin(4*pi*x)
    random_small (seed, bound) -- reproducible random coefficients with
                             ||q|| scaled to bound, bound <= 1/8 enforced
    """
    if name == "zero":
        a1, b1, a2, b2 = _coeffs(0)
        return FourierPotential(0, a1, b1, a2, b2)
    if name == "constant":
        c = float(params.get("c", 0.1))
        a1, b1, a2, b2 = _coeffs(0)
        a1[0] = c
        return FourierPotential(0, a1, b1, a2, b2)
    if name == "single_mode":
        eps = float(params.get("eps", 0.05))
        a1, b1, a2, b2 = _coeffs(1)
        a1[1] = eps
        return FourierPotential(1, a1, b1, a2, b2)
    if name == "two_mode":
        eps1 = float(params.get("eps1", 0.06))
        eps2 = float(params.get("eps2", 0.04))
        a1, b1, a2, b2 = _coeffs(2)
        a1[1] = eps1
        b2[2] = eps2
        return FourierPotential(2, a1, b1, a2, b2)
    if name == "random_small":
        seed = int(params.get("seed", 0))
        bound = float(params.get("bound", params.get("amp", 0.05)))
        if not 0.0 < bound <= SMALL_NORM_BOUND:
            raise ValueError(
                f"random_small bound must lie in (0, {SMALL_NORM_BOUND}], got {bound}"
            )
        k_max = int(params.get("k_max", 3))
        rng = np.random.default_rng(seed)
        raw = rng.uniform(-1.0, 1.0, size=(4, k_max + 1))
        raw[1, 0] = 0.0
        raw[3, 0] = 0.0
        pot = FourierPotential(k_max, raw[0], raw[1], raw[2], raw[3])
        scale = bound / norm(pot)
        return FourierPotential(k_max, *(scale * raw))
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def to_dict(q: FourierPotential) -> dict:
    """Serialize to the potential-file schema."""
    return {
        "k_max": q.k_max,
        "q1": {"cos": list(q.a1), "sin": list(q.b1[1:])},
        "q2": {"cos": list(q.a2), "sin": list(q.b2[1:])},
    }


def from_dict(d: dict) -> FourierPotential:
    """Parse the potential-file schema."""
    k_max = int(d["k_max"])
    arrs = []
    for comp in ("q1", "q2"):
        cos = np.asarray(d[comp]["cos"], dtype=float)
        sin = np.asarray(d[comp]["sin"], dtype=float)
        if cos.shape != (k_max + 1,) or sin.shape != (k_max,):
            raise ValueError(
                f"{comp}: cosine array must have length k_max+1 and sine array k_max"
            )
        arrs.append(cos)
        arrs.append(np.concatenate(([0.0], sin)))
    return FourierPotential(k_max, arrs[0], arrs[1], arrs[2], arrs[3])


def save(q: FourierPotential, path) -> None:
    with open(path, "w") as f:
        json.dump(to_dict(q), f, indent=2)
        f.write("\n")


def load(path) -> FourierPotential:
    with open(path) as f:
        return from_dict(json.load(f))
