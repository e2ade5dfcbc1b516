"""Maximum pseudo-likelihood estimation for the isotropic pairwise GMRF."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCovarianceError,
    DegenerateFieldError,
    InvalidArgumentError,
    SingularMeanError,
)
from .field import PatternCovariance, as_field, center_and_neighbor_sums

# squared-quantity threshold: a neighbour-sum energy below this fraction of
# its magnitude bound is rounding noise, not signal
_ZERO_SQ = 1e-24


@dataclass(frozen=True)
class ModelParams:
    mu: float
    sigma2: float
    beta: float

    def __post_init__(self):
        if not self.sigma2 > 0 or not math.isfinite(self.sigma2):
            raise InvalidArgumentError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not math.isfinite(self.beta) or not math.isfinite(self.mu):
            raise InvalidArgumentError("mu and beta must be finite")

    def replace(self, **changes) -> "ModelParams":
        values = {"mu": self.mu, "sigma2": self.sigma2, "beta": self.beta}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class EstimationReport:
    params: ModelParams
    n_sites: int
    k: int
    score_at_beta: float

    CSV_HEADER = "n,k,mu,sigma2,beta,score"

    def as_dict(self):
        return {
            "n": self.n_sites,
            "k": self.k,
            "mu": self.params.mu,
            "sigma2": self.params.sigma2,
            "beta": self.params.beta,
            "score": self.score_at_beta,
        }

    def to_text(self) -> str:
        return "\n".join(f"{key}={value!r}" for key, value in self.as_dict().items()) + "\n"

    def to_csv_row(self) -> str:
        return ",".join(repr(v) for v in self.as_dict().values())


def _deviations(field, nbhd, mu):
    center, nsum = center_and_neighbor_sums(field, nbhd)
    return center - mu, nsum - nbhd.k * mu


def log_pseudo_likelihood(field, nbhd, params: ModelParams) -> float:
    """Natural-log pseudo-likelihood summed over the admitted sites."""
    field = as_field(field)
    d, s = _deviations(field, nbhd, params.mu)
    n = d.size
    resid = d - params.beta * s
    return float(
        -0.5 * n * math.log(2.0 * math.pi * params.sigma2)
        - np.dot(resid, resid) / (2.0 * params.sigma2)
    )


def pl_score(field, nbhd, params: ModelParams) -> float:
    """First derivative of the log pseudo-likelihood with respect to beta."""
    d, s = _deviations(as_field(field), nbhd, params.mu)
    return float(np.dot(d - params.beta * s, s) / params.sigma2)


def estimate_beta(field, nbhd, mu: float) -> float:
    field = as_field(field)
    d, s = _deviations(field, nbhd, mu)
    den = float(np.dot(s, s))
    bound = s.size * (nbhd.k * (float(np.abs(field).max()) + abs(mu))) ** 2
    if den <= _ZERO_SQ * bound:
        raise DegenerateFieldError("neighbour sums vanish about mu; beta is undefined")
    return float(np.dot(d, s)) / den


def estimate_beta_from_cov(cov: PatternCovariance) -> float:
    """Ratio of the central-row sum to the neighbour-block sum."""
    den = cov.minus_sum
    scale = (cov.K - 1) ** 2 * (float(np.abs(cov.sigma_p).max()) + cov.mean_used ** 2)
    if abs(den) <= _ZERO_SQ * scale:
        raise DegenerateCovarianceError("neighbour covariance block sums to zero")
    return cov.rho_sum / den


def estimate_mu(field, nbhd, beta: float) -> float:
    field = as_field(field)
    denom = 1.0 - nbhd.k * beta
    if abs(denom) < 1e-12:
        raise SingularMeanError(f"mean estimator is singular at beta = 1/{nbhd.k}")
    center, nsum = center_and_neighbor_sums(field, nbhd)
    return float(np.sum(center - beta * nsum)) / (center.size * denom)


def estimate_sigma2(field, nbhd, mu: float, beta: float) -> float:
    d, s = _deviations(as_field(field), nbhd, mu)
    resid = d - beta * s
    return float(np.dot(resid, resid)) / d.size


def fit(field, nbhd, refine_mu: bool = False, max_rounds: int = 20, rtol: float = 1e-8) -> EstimationReport:
    """Estimate (mu, sigma2, beta).

    The mean is the sample mean, beta follows from it, and sigma2 from both.
    ``refine_mu`` alternates the pseudo-likelihood mean estimator with the beta
    estimator until the mean settles (at most ``max_rounds`` rounds).
    """
    field = as_field(field)
    if np.ptp(field) == 0:
        raise DegenerateFieldError("constant field has no spatial dependence to estimate")
    mu = float(field.mean())
    beta = estimate_beta(field, nbhd, mu)
    if refine_mu:
        scale = max(float(field.std()), abs(mu))
        for _ in range(max_rounds):
            new_mu = estimate_mu(field, nbhd, beta)
            beta = estimate_beta(field, nbhd, new_mu)
            done = abs(new_mu - mu) <= rtol * max(abs(new_mu), scale)
            mu = new_mu
            if done:
                break
    sigma2 = estimate_sigma2(field, nbhd, mu, beta)
    if not sigma2 > 0:
        raise DegenerateFieldError("every site is predicted exactly by its neighbours")
    params = ModelParams(mu, sigma2, beta)
    n = center_and_neighbor_sums(field, nbhd)[0].size
    score = pl_score(field, nbhd, params)
    if abs(score) > 1e-6 * n:
        raise ArithmeticError(f"beta estimate is not stationary (score {score:.3g})")
    return EstimationReport(params, n, nbhd.k, score)
