"""Second-order stability analysis of circles under the gas-of-circles energy.

A circle of radius r0 perturbed radially by a Fourier series sum_k a_k
exp(i r0 k t) has energy

    E = e0(r0) + a0 e1(r0) + (1/2) sum_k |a_k|^2 e2(k, r0)

to second order.  e1 = 0 picks out circular extrema, e2 >= 0 for every
wavenumber makes the extremum a minimum, and solving e1(r0_hat) = 0 for the
quadratic weight gives beta_c = (lambda_c + alpha_c r0_hat) / G10(r0_hat).
Sweeping beta_c traces a fold: below a threshold no circular extremum exists,
above it a minimum/maximum pair appears.

The module exposes the three coefficients, the beta solve, the fold scan and
a combined validity check, plus the CSV emitters used by the command line.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .interaction import GIntegrals, InteractionParams, g_integrals

__all__ = [
    "PriorParams",
    "StabilityReport",
    "DegenerateG10",
    "e0",
    "e1",
    "e2",
    "beta_for_minimum",
    "extrema_scan",
    "validate",
    "write_curve_csv",
]

_TWO_PI = 2.0 * np.pi


class DegenerateG10(ValueError):
    """beta_for_minimum has no solution: the circle does not self-interact."""


@dataclass(frozen=True)
class PriorParams:
    """The five prior constants plus the target stable radius.

    lambda_c weights boundary length (must be positive: the length term is
    what stabilizes high frequencies), alpha_c weights area, beta_c weights
    the quadratic interaction, d and epsilon shape the interaction weight,
    and r0_hat is the radius the parameters are tuned to stabilize.
    """

    lambda_c: float
    alpha_c: float
    beta_c: float
    d: float
    epsilon: float
    r0_hat: float

    def __post_init__(self) -> None:
        InteractionParams(self.d, self.epsilon)  # range validation
        if not (self.r0_hat > 0):
            raise ValueError(f"target radius must be > 0, got {self.r0_hat}")

    @property
    def interaction(self) -> InteractionParams:
        return InteractionParams(self.d, self.epsilon)


@dataclass
class StabilityReport:
    beta_solved: float
    e0_curve: list[tuple[float, float]]
    e2_curve: list[tuple[float, float]]
    extrema: list[tuple[float, str]]
    valid: bool
    reason: str


@lru_cache(maxsize=200_000)
def _g_cached(k: float, r0: float, d: float, epsilon: float, tol: float) -> GIntegrals:
    return g_integrals(k, r0, InteractionParams(d, epsilon), tol=tol)


def _g10_cached(r0: float, d: float, epsilon: float, tol: float) -> float:
    return _g_cached(0.0, r0, d, epsilon, tol).g10


def _g_all(k: float, r0: float, params: PriorParams, tol: float) -> GIntegrals:
    return _g_cached(k, r0, params.d, params.epsilon, tol)


def e0(r0: float, params: PriorParams, tol: float = 1e-8) -> float:
    """Energy of an exact circle of radius r0."""
    g00 = _g_all(0.0, r0, params, tol).g00
    return (
        _TWO_PI * params.lambda_c * r0
        + np.pi * params.alpha_c * r0**2
        - np.pi * params.beta_c * g00
    )


def e1(r0: float, params: PriorParams, tol: float = 1e-8) -> float:
    """First-order coefficient; the radial derivative of e0."""
    g10 = _g10_cached(r0, params.d, params.epsilon, tol)
    return _TWO_PI * (
        params.lambda_c + params.alpha_c * r0 - params.beta_c * g10
    )


def e2(k: float, r0: float, params: PriorParams, tol: float = 1e-8) -> float:
    """Second-order coefficient at wavenumber k = m / r0.

    The complex pieces combine to a real number by the parity of the kernels;
    anything beyond a 1e-8 imaginary residue indicates a quadrature fault and
    raises rather than being silently discarded.
    """
    g = _g_all(k, r0, params, tol)
    combo = 2.0 * g.g20 + g.g21 - 2.0j * r0 * k * g.g23 + (r0 * k) ** 2 * g.g24
    if abs(combo.imag) > 1e-8:
        raise RuntimeError(
            f"second-order combination has imaginary residue {combo.imag:g}"
        )
    return (
        _TWO_PI * params.lambda_c * r0 * k**2
        + _TWO_PI * params.alpha_c
        - _TWO_PI * params.beta_c * combo.real
    )


def beta_for_minimum(
    lambda_c: float,
    alpha_c: float,
    r0_hat: float,
    d: float,
    epsilon: float,
    tol: float = 1e-8,
) -> float:
    """Quadratic weight that makes r0_hat a circular extremum.

    Solves e1(r0_hat) = 0.  The caller must still run ``validate`` to confirm
    the extremum is the minimum branch and that all frequencies are stable.
    """
    g10 = _g10_cached(r0_hat, d, epsilon, tol)
    if abs(g10) < 1e-12:
        raise DegenerateG10(
            f"G10({r0_hat}) = {g10:g}: circle too small to interact "
            f"(2 r0 < d - epsilon)"
        )
    return (lambda_c + alpha_c * r0_hat) / g10


def _default_r0_grid(d: float, epsilon: float) -> np.ndarray:
    # interaction effects vanish once 2 r0 > d + epsilon, so this window
    # brackets the whole catastrophe curve
    return np.linspace(0.05 * d, 4.0 * (d + epsilon), 512)


def _extrema_at_beta(
    lambda_c: float,
    alpha_c: float,
    d: float,
    epsilon: float,
    beta: float,
    r0_grid: np.ndarray,
    tol: float = 1e-8,
) -> list[tuple[float, str]]:
    """Roots of e1 on the grid, refined by bisection, classified min/max."""

    def f(r: float) -> float:
        return lambda_c + alpha_c * r - beta * _g10_cached(r, d, epsilon, tol)

    vals = np.array([f(r) for r in r0_grid])
    out: list[tuple[float, str]] = []
    for i in range(len(r0_grid) - 1):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            root = float(r0_grid[i])
        elif va * vb < 0.0:
            lo, hi, vlo = float(r0_grid[i]), float(r0_grid[i + 1]), va
            while hi - lo > 1e-6:
                mid = 0.5 * (lo + hi)
                vm = f(mid)
                if vm == 0.0:
                    lo = hi = mid
                elif (vm > 0) == (vlo > 0):
                    lo, vlo = mid, vm
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
        else:
            continue
        step = 1e-4 * max(root, 1e-6)
        slope = f(root + step) - f(root - step)
        out.append((root, "min" if slope > 0 else "max"))
    return out


def extrema_scan(
    lambda_c: float,
    alpha_c: float,
    d: float,
    epsilon: float,
    betas,
    r0_range=None,
    tol: float = 1e-8,
) -> list[tuple[float, list[tuple[float, str]]]]:
    """For each beta in ``betas``, locate and classify all circular extrema.

    Returns a list of (beta, [(r0, kind), ...]) in the order given; an empty
    extrema list is a legitimate result (below the fold threshold).
    """
    grid = np.asarray(r0_range, float) if r0_range is not None else _default_r0_grid(d, epsilon)
    return [
        (float(b), _extrema_at_beta(lambda_c, alpha_c, d, epsilon, float(b), grid, tol))
        for b in betas
    ]


def validate(params: PriorParams, m_max: int = 100, tol: float = 1e-8) -> StabilityReport:
    """Full stability check of a parameter set at its target radius.

    Valid means: e1(r0_hat) vanishes relative to e0, the whole e2 spectrum up
    to m_max is nonnegative, and r0_hat sits on the minimum branch of the
    extrema curve.  The report always carries the sampled e0 and e2 curves so
    an invalid verdict can be inspected.
    """
    grid = _default_r0_grid(params.d, params.epsilon)
    e0_curve = [(float(r), e0(float(r), params, tol)) for r in grid[::2]]

    if params.lambda_c <= 0:
        # e2 ~ lambda r0 k^2 at large k, so a nonpositive length weight
        # cannot hold the spectrum up
        return StabilityReport(
            beta_solved=params.beta_c,
            e0_curve=e0_curve,
            e2_curve=[],
            extrema=[],
            valid=False,
            reason="high-frequency instability (lambda_c <= 0)",
        )

    e2_curve = []
    min_e2 = np.inf
    for m in range(0, m_max + 1):
        k = m / params.r0_hat
        v = e2(k, params.r0_hat, params, tol)
        e2_curve.append((k, v))
        min_e2 = min(min_e2, v)

    extrema = _extrema_at_beta(
        params.lambda_c, params.alpha_c, params.d, params.epsilon,
        params.beta_c, grid, tol,
    )

    e0_hat = e0(params.r0_hat, params, tol)
    e1_hat = e1(params.r0_hat, params, tol)

    if abs(e1_hat) > 1e-6 * max(abs(e0_hat), 1e-30):
        return StabilityReport(
            params.beta_c, e0_curve, e2_curve, extrema, False,
            f"no extremum at r0_hat (e1 = {e1_hat:g})",
        )
    mins = [r for r, kind in extrema if kind == "min"]
    on_min_branch = any(
        abs(r - params.r0_hat) <= max(1e-4 * params.r0_hat, 2e-6) for r in mins
    )
    if not on_min_branch:
        return StabilityReport(
            params.beta_c, e0_curve, e2_curve, extrema, False,
            "r0_hat is not on the minimum branch",
        )
    if min_e2 < -1e-8:
        return StabilityReport(
            params.beta_c, e0_curve, e2_curve, extrema, False,
            f"unstable frequency in spectrum (min e2 = {min_e2:g})",
        )
    return StabilityReport(
        params.beta_c, e0_curve, e2_curve, extrema, True, "stable",
    )


def write_curve_csv(path, header: str, rows) -> None:
    """Write (x, y) pairs as CSV with the exact two-column header given."""
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for x, y in rows:
            fh.write(f"{x:.12g},{y:.12g}\n")
