"""Permutation singular value function and expected-pressure root finding.

For a diagonal contraction with per-axis ratios r and an axis order sigma,
the cost of covering its cylinder at dimension budget s is

    phi_sigma_s(r) = prod_m |r[sigma[m]]| ^ w_m

with position exponents w = (1, ..., 1, frac(s), 0, ..., 0) when s <= d and
(s/d, ..., s/d) when s > d; the two branches agree at s = d, so everything
is continuous in s, including across integers.

The expected pressure F(s) maximizes, over all d! axis orders, the sum over
children of the expected cost; under the per-axis independence of the ratio
draws (R1) the expectation factorizes into per-axis moments.  F is strictly
decreasing with F(0) = N, so the roots s0 (level-1 system) and s_n (block
subsystems) are found by plain bisection, which monotonicity makes certified.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonContractionError
from .rifs import SpongeSpec
from .symbolic import SubsystemSpec

_MAX_DOUBLINGS = 200


def position_exponents(d: int, s: float) -> np.ndarray:
    """Exponent carried by the m-th axis in the chosen order (0-based m)."""
    if s < 0:
        raise ValueError("dimension budget s must be >= 0")
    if s > d:
        return np.full(d, s / d)
    w = np.zeros(d)
    fl = int(math.floor(s))
    w[:fl] = 1.0
    if fl < d and s > fl:
        w[fl] = s - fl
    return w


def axis_exponents(d: int, s: float, sigma) -> np.ndarray:
    """Per-axis exponents induced by axis order `sigma` (0-based axes)."""
    w_pos = position_exponents(d, s)
    w_axis = np.zeros(d)
    for m, axis in enumerate(sigma):
        w_axis[axis] = w_pos[m]
    return w_axis


def phi_sigma_s(ratios, sigma, s: float) -> float:
    """Cost factor of one level for a fixed axis order."""
    r = np.abs(np.asarray(ratios, dtype=float))
    w = position_exponents(len(r), s)
    out = 1.0
    for m, axis in enumerate(sigma):
        if w[m] != 0.0:
            out *= r[axis] ** w[m]
    return out


@dataclass(frozen=True)
class PsiValue:
    value: float
    sigma: tuple


def psi_s(ratio_levels, s: float) -> PsiValue:
    """Max over all axis orders of the cumulative cost along a word.

    `ratio_levels` is either a (levels, d) array of per-level ratios or a
    single length-d vector; the cumulative per-axis product is what the cost
    depends on.  All d! orders are tried; ties return the lexicographically
    smallest order.
    """
    arr = np.atleast_2d(np.asarray(ratio_levels, dtype=float))
    cum = np.prod(np.abs(arr), axis=0)
    d = cum.shape[0]
    best = None
    best_sigma = None
    for sigma in itertools.permutations(range(d)):
        val = phi_sigma_s(cum, sigma, s)
        if best is None or val > best:
            best, best_sigma = val, sigma
    return PsiValue(float(best), best_sigma)


def sorted_maximizer(cumulative) -> tuple:
    """The cost-maximizing axis order: axes by decreasing cumulative modulus.

    Stable sort makes ties resolve to the lexicographically smallest order;
    agrees with the exhaustive search in `psi_s`.
    """
    cum = np.abs(np.asarray(cumulative, dtype=float))
    return tuple(int(i) for i in np.argsort(-cum, kind="stable"))


def _child_expectation(spec: SpongeSpec, child: int, w_axis: np.ndarray) -> float:
    out = 1.0
    for k in range(spec.d):
        if w_axis[k] != 0.0:
            out *= spec.marginal(child, k).moment(float(w_axis[k]))
    return out


def expected_pressure(spec: SpongeSpec, s: float):
    """F(s) = max over axis orders of sum_i E(cost of child i); returns (F, sigma)."""
    best = None
    best_sigma = None
    for sigma in itertools.permutations(range(spec.d)):
        w_axis = axis_exponents(spec.d, s, sigma)
        total = sum(_child_expectation(spec, i, w_axis) for i in range(1, spec.N + 1))
        if best is None or total > best:
            best, best_sigma = total, sigma
    return float(best), best_sigma


def expected_subsystem_pressure(spec: SpongeSpec, sub: SubsystemSpec, s: float):
    """Block-subsystem pressure: free part to the n-th power times the fixed suffix.

    Per-letter expectations multiply along a block because the draws at
    distinct levels are independent, so the sum over the N^n super-letters
    factorizes exactly.
    """
    best = None
    best_sigma = None
    for sigma in itertools.permutations(range(spec.d)):
        w_axis = axis_exponents(spec.d, s, sigma)
        base = sum(_child_expectation(spec, i, w_axis) for i in range(1, spec.N + 1))
        suffix = 1.0
        for letter in sub.suffix:
            suffix *= _child_expectation(spec, letter, w_axis)
        total = base**sub.n * suffix
        if best is None or total > best:
            best, best_sigma = total, sigma
    return float(best), best_sigma


@dataclass(frozen=True)
class DimensionReport:
    """Solved root of the expected-pressure equation plus solver diagnostics."""

    s_star: float
    residual: float                # F(s_star) - 1
    sigma: tuple                   # maximizing axis order at the root (0-based)
    evaluations: int
    tol: float
    bracket_history: tuple = field(repr=False)
    subsystem_n: int | None = None

    def to_dict(self) -> dict:
        return {
            "s_star": self.s_star,
            "residual": self.residual,
            "sigma": list(self.sigma),
            "evaluations": self.evaluations,
            "tol": self.tol,
            "subsystem_n": self.subsystem_n,
            "bracket_final": list(self.bracket_history[-1]),
            "bisection_steps": len(self.bracket_history),
        }


def _bisect_pressure(F, d: int, tol: float, subsystem_n=None) -> DimensionReport:
    evals = 0

    def eval_f(s):
        nonlocal evals
        evals += 1
        return F(s)

    lo = 0.0
    hi = float(d)
    fhi, sigma = eval_f(hi)
    doublings = 0
    while fhi >= 1.0:
        hi *= 2.0
        fhi, sigma = eval_f(hi)
        doublings += 1
        if doublings > _MAX_DOUBLINGS:
            raise NonContractionError("pressure never drops below 1; ratios do not contract")
    history = [(lo, hi)]
    while True:
        mid = 0.5 * (lo + hi)
        fmid, sigma = eval_f(mid)
        if abs(fmid - 1.0) <= tol or (hi - lo) <= tol * max(1.0, mid):
            return DimensionReport(
                s_star=mid, residual=fmid - 1.0, sigma=sigma, evaluations=evals,
                tol=tol, bracket_history=tuple(history), subsystem_n=subsystem_n)
        if fmid > 1.0:
            lo = mid
        else:
            hi = mid
        history.append((lo, hi))


def solve_s0(spec: SpongeSpec, tol: float = 1e-10) -> DimensionReport:
    """Root of the expected-pressure equation; the almost-sure dimension is min(d, s0)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if spec.alpha_hi >= 1:
        raise NonContractionError("alpha_hi >= 1: cannot bracket the pressure root")
    return _bisect_pressure(lambda s: expected_pressure(spec, s), spec.d, tol)


def solve_sn(spec: SpongeSpec, sub: SubsystemSpec, tol: float = 1e-10) -> DimensionReport:
    """Root s_n of the block-subsystem pressure; s_n <= s0 and s_n -> s0 in n."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if spec.alpha_hi >= 1:
        raise NonContractionError("alpha_hi >= 1: cannot bracket the pressure root")
    return _bisect_pressure(lambda s: expected_subsystem_pressure(spec, sub, s),
                            spec.d, tol, subsystem_n=sub.n)
