"""Brute-force polygonal evaluation of the full contour energy.

This is the verification oracle for the analytic machinery: it knows nothing
about kernels or Fourier integrals.  A contour is a closed polygon; length is
summed segment by segment, area comes from the shoelace formula, and the
quadratic term is the literal double sum over ordered vertex pairs with
central-difference tangents.  Radially perturbed circles are built from a
small Fourier coefficient table so the second-order model of the stability
module can be checked against direct evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .interaction import phi
from .stability import PriorParams, e0 as stability_e0, e1 as stability_e1, e2 as stability_e2

__all__ = [
    "PolyContour",
    "FourierPerturbation",
    "NonPositiveRadius",
    "EnergyBreakdown",
    "build_contour",
    "energy",
    "taylor_residual",
]


class NonPositiveRadius(ValueError):
    """A sampled radius of the perturbed circle dropped to zero or below."""


@dataclass
class PolyContour:
    """Closed polygon: vertices in order, last implicitly joined to first."""

    vertices: np.ndarray  # (n, 2)
    closed: bool = True

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        if len(self.vertices) < 16:
            raise ValueError("need at least 16 vertices")
        seg = np.roll(self.vertices, -1, axis=0) - self.vertices
        if np.any(np.hypot(seg[:, 0], seg[:, 1]) == 0.0):
            raise ValueError("consecutive vertices must be distinct")


@dataclass
class FourierPerturbation:
    """Radial perturbation of a circle: mode m maps to complex amplitude a_m.

    Only m >= 0 is stored; negative modes are the conjugates, which keeps the
    radius real.  The m = 0 amplitude must therefore be real.
    """

    r0: float
    coeffs: dict[int, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.r0 > 0):
            raise ValueError(f"base radius must be > 0, got {self.r0}")
        for m, a in self.coeffs.items():
            if m < 0:
                raise ValueError("store only modes m >= 0; negatives are implied")
            if m == 0 and abs(complex(a).imag) > 0:
                raise ValueError("a_0 must be real (conjugate symmetry)")

    def radius_at(self, t: np.ndarray) -> np.ndarray:
        r = np.full(t.shape, self.r0)
        for m, a in self.coeffs.items():
            a = complex(a)
            if m == 0:
                r = r + a.real
            else:
                r = r + 2.0 * (a * np.exp(1j * m * t)).real
        return r

    def scaled(self, s: float) -> "FourierPerturbation":
        return FourierPerturbation(self.r0, {m: s * complex(a) for m, a in self.coeffs.items()})


class EnergyBreakdown(NamedTuple):
    length: float
    area: float
    quadratic: float
    total: float


def build_contour(p: FourierPerturbation, n_vertices: int) -> PolyContour:
    """Sample the perturbed circle at n equally spaced parameter values."""
    if n_vertices < 16:
        raise ValueError("need at least 16 vertices")
    t = -np.pi + 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    r = p.radius_at(t)
    if np.any(r <= 0.0):
        raise NonPositiveRadius(f"minimum sampled radius {r.min():g}")
    return PolyContour(np.column_stack((r * np.cos(t), r * np.sin(t))))


def _pair_sum(v: np.ndarray, tau: np.ndarray, params: PriorParams) -> float:
    """Canonical double sum of tau_i . tau_j Phi(|x_i - x_j|).

    Computed as diagonal plus twice the upper triangle so that exchanging the
    roles of i and j is the bit-identical computation.  Pairs separated by
    d + epsilon or more contribute nothing and are skipped.
    """
    n = len(v)
    ip = params.interaction
    cutoff = params.d + params.epsilon
    diag = float(np.sum((tau**2).sum(axis=1)) * phi(0.0, ip))
    upper = 0.0
    block = 512
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        dx = v[i0:i1, None, 0] - v[None, :, 0]
        dy = v[i0:i1, None, 1] - v[None, :, 1]
        dist = np.hypot(dx, dy)
        dot = tau[i0:i1, None, 0] * tau[None, :, 0] + tau[i0:i1, None, 1] * tau[None, :, 1]
        rows = np.arange(i0, i1)[:, None]
        mask = (np.arange(n)[None, :] > rows) & (dist < cutoff)
        upper += float(np.sum(dot * phi(dist, ip) * mask))
    return diag + 2.0 * upper


def energy(c: PolyContour, params: PriorParams) -> EnergyBreakdown:
    """Length, shoelace area, quadratic pair term, and their weighted total.

    Tangents are central differences over the parameter step dt = 2 pi / n,
    and the double sum includes the self pair (part of the continuum double
    integral).  The total is lambda_c L + alpha_c A + quadratic.
    """
    v = c.vertices
    n = len(v)
    dt = 2.0 * np.pi / n
    nxt = np.roll(v, -1, axis=0)
    prv = np.roll(v, 1, axis=0)
    seg = nxt - v
    length = float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))
    area = 0.5 * float(np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))
    tau = (nxt - prv) / (2.0 * dt)
    quad = -0.5 * params.beta_c * _pair_sum(v, tau, params) * dt * dt
    total = params.lambda_c * length + params.alpha_c * area + quad
    return EnergyBreakdown(length, area, quad, total)


@lru_cache(maxsize=64)
def _circle_energy(r0: float, params: PriorParams, n_vertices: int) -> float:
    return energy(build_contour(FourierPerturbation(r0), n_vertices), params).total


def taylor_residual(
    p: FourierPerturbation,
    s: float,
    params: PriorParams,
    n_vertices: int = 4096,
    tol: float = 1e-8,
) -> float:
    """Energy change of the s-scaled perturbation minus its second-order model.

    Both the perturbed energy and the base-circle energy are measured on the
    same n-gon, so their shared discretization error cancels and the residual
    probes the analytic terms alone: s a0 e1 + (1/2) sum_k |s a_k|^2 e2(k)
    with positive and negative wavenumbers folded together.  For smooth
    random perturbations the residual shrinks at cubic order in s.
    """
    contour = build_contour(p.scaled(s), n_vertices)
    measured = energy(contour, params).total - _circle_energy(p.r0, params, n_vertices)
    model = 0.0
    for m, a in p.coeffs.items():
        amp2 = abs(complex(a)) ** 2 * s * s
        if m == 0:
            model += s * complex(a).real * stability_e1(p.r0, params, tol)
            model += 0.5 * amp2 * stability_e2(0.0, p.r0, params, tol)
        else:
            model += amp2 * stability_e2(m / p.r0, p.r0, params, tol)
    return float(measured - model)
