"""Pairwise boundary interaction weight and its circle-geometry integrals.

The gas-of-circles prior couples every pair of boundary points through a
weight Phi(z) of their Euclidean distance z.  Phi is 1 below d - epsilon,
falls smoothly to 0 across [d - epsilon, d + epsilon], and vanishes beyond.
This module evaluates Phi and its first two derivatives, the eight kernel
functions that arise when the pair energy is expanded to second order around
a circle of radius r0, and the Fourier-space integrals of those kernels over
the separation angle p in [-pi, pi].

Everything here is a pure function; the quadrature is deterministic for a
given tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "InteractionParams",
    "KernelValues",
    "GIntegrals",
    "QuadratureNotConverged",
    "phi",
    "phi_prime",
    "phi_double_prime",
    "kernels",
    "g_integrals",
]

# below this |sin(p/2)| the A(p)*Phi' product is replaced by its p -> 0 limit (zero)
_SIN_TINY = 1e-12


class QuadratureNotConverged(RuntimeError):
    """Raised when a panel fails to meet its tolerance at maximum refinement."""


@dataclass(frozen=True)
class InteractionParams:
    """Range d and falloff half-width epsilon of the interaction weight.

    The branch boundaries of Phi sit at d - epsilon and d + epsilon, so
    epsilon <= d keeps both nonnegative.
    """

    d: float
    epsilon: float

    def __post_init__(self) -> None:
        if not (self.d > 0):
            raise ValueError(f"interaction range d must be > 0, got {self.d}")
        if not (0 < self.epsilon <= self.d):
            raise ValueError(
                f"falloff half-width must satisfy 0 < epsilon <= d, got {self.epsilon}"
            )


def phi(z, p: InteractionParams):
    """Interaction weight at distance z >= 0.

    Piecewise: 1 for z < d - eps; a smooth cosine-integral step on
    [d - eps, d + eps); 0 for z >= d + eps.  C2 everywhere (the middle
    branch has cubic contact with both constants).
    """
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    out[z < p.d - p.epsilon] = 1.0
    mid = (z >= p.d - p.epsilon) & (z < p.d + p.epsilon)
    x = (z[mid] - p.d) / p.epsilon
    out[mid] = 0.5 * (1.0 - x - np.sin(np.pi * x) / np.pi)
    return out if out.shape else float(out)


def phi_prime(z, p: InteractionParams):
    """First derivative of ``phi``; zero outside the falloff band."""
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    mid = (z >= p.d - p.epsilon) & (z < p.d + p.epsilon)
    x = (z[mid] - p.d) / p.epsilon
    out[mid] = -(1.0 + np.cos(np.pi * x)) / (2.0 * p.epsilon)
    return out if out.shape else float(out)


def phi_double_prime(z, p: InteractionParams):
    """Second derivative of ``phi``; zero outside the falloff band."""
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.shape)
    mid = (z >= p.d - p.epsilon) & (z < p.d + p.epsilon)
    x = (z[mid] - p.d) / p.epsilon
    out[mid] = np.pi * np.sin(np.pi * x) / (2.0 * p.epsilon**2)
    return out if out.shape else float(out)


@dataclass(frozen=True)
class KernelValues:
    """The eight second-order expansion kernels at separation angle p.

    f00, f10, f20, f21, f24 are even in p; f11, f22, f23 are odd.
    """

    f00: np.ndarray
    f10: np.ndarray
    f11: np.ndarray
    f20: np.ndarray
    f21: np.ndarray
    f22: np.ndarray
    f23: np.ndarray
    f24: np.ndarray


def kernels(p, r0: float, ip: InteractionParams) -> KernelValues:
    """Evaluate all eight expansion kernels on an array of separation angles.

    Two boundary points of a circle of radius r0 at parameter separation p sit
    a chord X0 = 2 r0 |sin(p/2)| apart.  The kernels combine Phi and its
    derivatives at X0 with trigonometric factors of p.  The prefactor
    A(p) = cos^2(p/2)/|sin(p/2)| appearing in f20 and f21 diverges as p -> 0
    but multiplies phi_prime(X0) which vanishes there; the product is given
    its limit value 0 whenever |sin(p/2)| underflows the guard threshold.
    """
    p = np.asarray(p, dtype=float)
    s = np.abs(np.sin(p / 2.0))
    c2 = np.cos(p / 2.0) ** 2
    cosp = np.cos(p)
    sinp = np.sin(p)
    x0 = 2.0 * r0 * s
    w = phi(x0, ip)
    w1 = phi_prime(x0, ip)
    w2 = phi_double_prime(x0, ip)

    safe = s > _SIN_TINY
    a_w1 = np.zeros(p.shape)
    np.divide(c2 * w1, s, out=a_w1, where=safe)

    return KernelValues(
        f00=r0**2 * cosp * w,
        f10=r0 * cosp * (w + r0 * s * w1),
        f11=r0 * sinp * w,
        f20=r0 * cosp * (0.25 * a_w1 + 0.5 * r0 * s**2 * w2 + s * w1),
        f21=cosp * (w + 2.0 * r0 * s * w1 - 0.5 * r0 * a_w1 + r0**2 * s**2 * w2),
        f22=r0 * s * sinp * w1,
        f23=sinp * (w + r0 * s * w1),
        f24=cosp * w,
    )


@dataclass(frozen=True)
class GIntegrals:
    """Angle integrals of the kernels, with the oscillatory phase where due.

    g00, g10, g20 carry no phase and are real.  g21, g23, g24 are integrals
    of exp(-i r0 k p) times their kernel and depend on the wavenumber k.
    The combination 2 g20 + g21 - 2i r0 k g23 + r0^2 k^2 g24 is real up to
    quadrature residue; that is what feeds the second-order energy.
    """

    g00: float
    g10: float
    g20: float
    g21: complex
    g23: complex
    g24: complex


def _panel_integrate(f, a: float, b: float, tol: float, n0: int) -> complex:
    """Trapezoid-doubling Simpson on one panel with a Richardson error check.

    ``f`` must accept an ndarray of sample points.  Doubling reuses all
    previous evaluations; the Simpson value is extrapolated from successive
    trapezoid sums and accepted when two levels agree within ``tol``.
    """
    n = n0
    x = np.linspace(a, b, n + 1)
    fx = f(x)
    h = (b - a) / n
    trap = h * (np.sum(fx) - 0.5 * (fx[0] + fx[-1]))
    simpson_prev = None
    for _ in range(22):
        mid = np.linspace(a + 0.5 * h, b - 0.5 * h, n)
        fmid = f(mid)
        trap_half = 0.5 * trap + 0.5 * h * np.sum(fmid)
        simpson = (4.0 * trap_half - trap) / 3.0
        if simpson_prev is not None and abs(simpson - simpson_prev) < tol:
            return simpson
        trap = trap_half
        h *= 0.5
        n *= 2
        simpson_prev = simpson
    raise QuadratureNotConverged(
        f"panel [{a:.6g}, {b:.6g}] did not reach tol={tol:g} at n={n}"
    )


def _panel_breakpoints(r0: float, ip: InteractionParams) -> list[float]:
    """Split points of [-pi, pi]: the origin plus every chord-kink angle.

    Phi(X0(p)) changes branch where 2 r0 |sin(p/2)| crosses d -+ eps; the
    integrands are smooth between those angles, so each panel converges fast.
    """
    pts = {0.0}
    for z in (ip.d - ip.epsilon, ip.d + ip.epsilon):
        q = z / (2.0 * r0)
        if 0.0 < q < 1.0:
            pk = 2.0 * np.arcsin(q)
            pts.add(pk)
            pts.add(-pk)
    return [-np.pi] + sorted(pts) + [np.pi]


def g_integrals(
    k: float, r0: float, ip: InteractionParams, tol: float = 1e-8
) -> GIntegrals:
    """Integrate the kernels over p in [-pi, pi] to absolute tolerance ``tol``.

    ``k`` is the perturbation wavenumber, m / r0 for integer mode m.  The
    phase exp(-i r0 k p) then has exactly m periods over the interval; the
    initial sample count per panel scales with m so the oscillation can never
    alias to a spuriously converged coarse answer.

    Raises QuadratureNotConverged if any panel fails at maximum refinement.
    """
    if not (r0 > 0):
        raise ValueError(f"radius must be > 0, got {r0}")
    breaks = _panel_breakpoints(r0, ip)
    period_count = abs(k) * r0
    n0 = 16
    while n0 < 4 * period_count and n0 < 16384:
        n0 *= 2
    panel_tol = min(tol / (len(breaks) - 1), 1e-10)

    def run(name: str, phased: bool) -> complex:
        total = 0.0 + 0.0j
        for a, b in zip(breaks[:-1], breaks[1:]):
            if phased:
                fn = lambda x: getattr(kernels(x, r0, ip), name) * np.exp(
                    -1j * r0 * k * x
                )
            else:
                fn = lambda x: getattr(kernels(x, r0, ip), name) + 0.0j
            total += _panel_integrate(fn, a, b, panel_tol, n0)
        return total

    return GIntegrals(
        g00=run("f00", False).real,
        g10=run("f10", False).real,
        g20=run("f20", False).real,
        g21=run("f21", True),
        g23=run("f23", True),
        g24=run("f24", True),
    )
