"""Composite per-configuration analysis: fit, expected information, entropy."""
from __future__ import annotations

import warnings

from .entropy import gmrf_entropy
from .errors import DegenerateCovarianceError, InvalidArgumentError
from .estimation import EstimationReport, ModelParams, fit
from .field import PatternCovariance, extract_patterns, pattern_covariance
from .fisher import (
    InfoSummary,
    asymptotic_variance,
    beta_star,
    expected_phi,
    expected_psi,
)

# Which variance scales the expected measures:
#   central - the pattern's central variance everywhere (default)
#   mpl     - the pseudo-likelihood residual variance everywhere
#   mixed   - residual variance as prefactor, central variance in the
#             leading score-moment term
VARIANCE_MODES = ("central", "mpl", "mixed")


def summarize_cov(cov: PatternCovariance, beta: float, mu: float | None = None,
                  sigma2_mpl: float | None = None, variance: str = "central") -> InfoSummary:
    if variance not in VARIANCE_MODES:
        raise InvalidArgumentError(f"unknown variance mode {variance!r}")
    if variance != "central" and sigma2_mpl is None:
        raise InvalidArgumentError(f"variance mode {variance!r} needs the residual variance")
    mu = cov.mean_used if mu is None else mu
    sigma2 = cov.sigma_ii if variance == "central" else sigma2_mpl
    if not sigma2 > 0:
        raise DegenerateCovarianceError("central pattern variance is zero")
    params = ModelParams(mu, sigma2, beta)
    first = cov.sigma_ii if variance == "mixed" else None

    phi = expected_phi(cov, params, first_term_var=first)
    psi = expected_psi(cov, params)
    flags = []
    if phi < 0:
        flags.append("negative-phi")
        warnings.warn(f"expected phi is negative ({phi:.6g}); covariance is not positive semidefinite "
                      "for this variance convention", RuntimeWarning, stacklevel=2)
    roots = beta_star(cov)
    return InfoSummary(
        phi_expected=phi,
        psi_expected=psi,
        gap=phi - psi,
        l_global=phi / psi if psi > 0 else float("nan"),
        entropy=gmrf_entropy(cov, params),
        asym_var=asymptotic_variance(cov, params, first_term_var=first),
        beta_star_lo=None if roots is None else roots[0],
        beta_star_hi=None if roots is None else roots[1],
        params_used=params,
        flags=tuple(flags),
    )


def summarize(field, nbhd, variance: str = "central", beta: float | None = None):
    """Fit the field and summarize its global information measures.

    ``beta`` overrides the fitted value inside the expected measures.
    Returns ``(EstimationReport, PatternCovariance, InfoSummary)``.
    """
    report: EstimationReport = fit(field, nbhd)
    cov = pattern_covariance(extract_patterns(field, nbhd), report.params.mu)
    b = report.params.beta if beta is None else beta
    summary = summarize_cov(cov, b, report.params.mu, report.params.sigma2, variance)
    return report, cov, summary
