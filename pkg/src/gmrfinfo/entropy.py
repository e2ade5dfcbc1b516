"""Shannon entropy of the GMRF under the pseudo-likelihood, and histogram entropy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError
from .estimation import ModelParams, estimate_beta_from_cov
from .field import PatternCovariance
from .fisher import expected_psi


@dataclass(frozen=True)
class EntropyReport:
    h_beta: float
    h_gauss: float
    beta_mh: float
    curvature: float


def gaussian_entropy(sigma2: float) -> float:
    """Differential entropy (nats) of N(., sigma2)."""
    if not sigma2 > 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
    return 0.5 * math.log(2.0 * math.pi * sigma2) + 0.5


def gmrf_entropy(cov: PatternCovariance, params: ModelParams, scaled: bool = False) -> float:
    """Per-site entropy, a convex quadratic in ``params.beta``.

    ``scaled=True`` multiplies by the number of patterns behind ``cov``.
    """
    b = params.beta
    h = gaussian_entropy(params.sigma2) - (
        b / params.sigma2 * cov.rho_sum - 0.5 * b * b * expected_psi(cov, params)
    )
    return h * cov.n_rows if scaled else h


def beta_min_entropy(cov: PatternCovariance) -> float:
    # the entropy minimiser coincides with the pseudo-likelihood estimate
    return estimate_beta_from_cov(cov)


def entropy_report(cov: PatternCovariance, params: ModelParams) -> EntropyReport:
    return EntropyReport(
        h_beta=gmrf_entropy(cov, params),
        h_gauss=gaussian_entropy(params.sigma2),
        beta_mh=beta_min_entropy(cov),
        curvature=expected_psi(cov, params),
    )


def histogram_entropy(image, bins: int = 256) -> float:
    """Entropy in bits of the gray-level histogram of rounded values in [0, 255]."""
    if bins < 2:
        raise InvalidArgumentError(f"need at least 2 bins, got {bins}")
    values = np.asarray(image, dtype=np.float64).ravel()
    if values.size == 0:
        raise InsufficientDataError("empty image")
    levels = np.clip(np.floor(values + 0.5), 0, 255)
    counts, _ = np.histogram(levels, bins=bins, range=(-0.5, 255.5))
    p = counts[counts > 0] / values.size
    return float(-np.sum(p * np.log2(p))) + 0.0
