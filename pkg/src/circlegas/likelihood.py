"""Gaussian image model: interior and background intensity classes plus a
boundary-gradient term.

The data energy of a region R in image I is the sum of per-pixel Gaussian
negative log-likelihoods, (I - mu)^2 / 2 sigma^2 inside and the barred
analogue outside, plus lambda_i times the flux of grad I through the region
boundary.  By the discrete divergence theorem that flux equals the sum of the
image Laplacian over R, which is the form the evolution force uses.

Only a single scalar band is modeled; normalization constants of the
Gaussians are dropped throughout (they do not move boundaries once the
parameters are fixed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImageGrid",
    "LikelihoodParams",
    "DegenerateClass",
    "fit",
    "classify",
    "energy_terms",
    "image_laplacian",
]


class DegenerateClass(ValueError):
    """A mask class is too small or has zero intensity variance."""


@dataclass
class ImageGrid:
    """2-D scalar image, values nominally in [0, 1], row-major [y, x]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("image must be 2-D")
        if self.values.shape[0] < 8 or self.values.shape[1] < 8:
            raise ValueError(f"image too small: {self.values.shape}, need >= 8x8")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image contains non-finite values")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class LikelihoodParams:
    """Interior (mu, sigma) and background (mu_bar, sigma_bar) Gaussians plus
    the gradient-term weight lambda_i."""

    mu: float
    sigma: float
    mu_bar: float
    sigma_bar: float
    lambda_i: float = 0.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and self.sigma_bar > 0):
            raise ValueError("sigma and sigma_bar must be > 0")
        if self.lambda_i < 0:
            raise ValueError("lambda_i must be >= 0")


def _as_values(image) -> np.ndarray:
    return image.values if isinstance(image, ImageGrid) else np.asarray(image, float)


def fit(image, mask) -> tuple[float, float, float, float]:
    """Estimate (mu, sigma, mu_bar, sigma_bar) from a labeled mask.

    Sample mean and population standard deviation per class.  Raises
    DegenerateClass if either class has fewer than 16 pixels or zero
    variance (a noise-free two-level image cannot yield usable sigmas).
    """
    values = _as_values(image)
    mask = np.asarray(mask, bool)
    if mask.shape != values.shape:
        raise ValueError("mask and image shapes differ")
    out = []
    for name, cls in (("interior", values[mask]), ("background", values[~mask])):
        if cls.size < 16:
            raise DegenerateClass(f"{name} class has {cls.size} pixels, need >= 16")
        m = float(cls.mean())
        s = float(cls.std())
        # identical samples can leave rounding dust in the std
        if s <= 1e-12 * max(1.0, abs(m)):
            raise DegenerateClass(f"{name} class has zero variance")
        out += [m, s]
    return out[0], out[1], out[2], out[3]


def classify(image, lik: LikelihoodParams) -> np.ndarray:
    """Per-pixel maximum-likelihood class mask (True = interior).

    A pixel is interior when its interior negative log-likelihood, including
    the log sigma normalization, is below the background one.  Useful as a
    data-driven starting region for the evolution.
    """
    values = _as_values(image)
    nll_in = (values - lik.mu) ** 2 / (2.0 * lik.sigma**2) + np.log(lik.sigma)
    nll_bg = (values - lik.mu_bar) ** 2 / (2.0 * lik.sigma_bar**2) + np.log(
        lik.sigma_bar
    )
    return nll_in < nll_bg


def image_laplacian(values: np.ndarray) -> np.ndarray:
    """5-point Laplacian with reflecting boundary (no spurious frame edges)."""
    padded = np.pad(np.asarray(values, float), 1, mode="reflect")
    return (
        padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
        - 4.0 * padded[1:-1, 1:-1]
    )


def energy_terms(image, mask, lik: LikelihoodParams) -> tuple[float, float, float]:
    """(interior_nll, background_nll, gradient_term) of the masked region.

    The gradient term is the lambda_i-weighted flux of grad I through the
    region boundary, evaluated as the sum of face differences I_out - I_in
    over every boundary face.  Faces on the image frame contribute nothing
    under the reflecting convention.
    """
    values = _as_values(image)
    mask = np.asarray(mask, bool)
    if mask.shape != values.shape:
        raise ValueError("mask and image shapes differ")

    interior = float(np.sum((values[mask] - lik.mu) ** 2) / (2.0 * lik.sigma**2))
    background = float(
        np.sum((values[~mask] - lik.mu_bar) ** 2) / (2.0 * lik.sigma_bar**2)
    )

    flux = 0.0
    # horizontal faces: between (y, x) and (y, x+1)
    inside_l, inside_r = mask[:, :-1], mask[:, 1:]
    vals_l, vals_r = values[:, :-1], values[:, 1:]
    face = inside_l != inside_r
    flux += float(np.sum(np.where(inside_l, vals_r - vals_l, vals_l - vals_r)[face]))
    # vertical faces
    inside_u, inside_d = mask[:-1, :], mask[1:, :]
    vals_u, vals_d = values[:-1, :], values[1:, :]
    face = inside_u != inside_d
    flux += float(np.sum(np.where(inside_u, vals_d - vals_u, vals_u - vals_d)[face]))

    return interior, background, lik.lambda_i * flux
