"""Observed (local) and expected (global) Fisher information about beta.

Expected quantities are built from four scalars of the pattern covariance:
the central variance, the central-row sum ``s``, the neighbour-block sum
``S`` and beta.  The entry sums of the Kronecker products collapse to
``s**2``, ``s*S`` and ``S**2``; the products themselves are never formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DegenerateCovarianceError, InvalidArgumentError
from .estimation import ModelParams
from .field import PatternCovariance, as_field, center_and_neighbor_sums, INTERIOR

PHI, PSI, LINFO = "phi", "psi", "linfo"


@dataclass(frozen=True)
class InfoMap:
    """Per-site information values; undefined sites hold NaN and are masked out."""

    kind: str
    values: np.ndarray
    defined: np.ndarray
    params: ModelParams

    @property
    def shape(self):
        return self.values.shape

    def mean(self) -> float:
        return float(self.values[self.defined].mean())


@dataclass(frozen=True)
class InfoSummary:
    phi_expected: float
    psi_expected: float
    gap: float
    l_global: float
    entropy: float
    asym_var: float
    beta_star_lo: float | None
    beta_star_hi: float | None
    params_used: ModelParams
    flags: tuple = dc_field(default=())

    CSV_HEADER = "phi,psi,gap,linfo,entropy,var,beta_star_lo,beta_star_hi"

    def to_csv_row(self) -> str:
        cells = [self.phi_expected, self.psi_expected, self.gap, self.l_global,
                 self.entropy, self.asym_var, self.beta_star_lo, self.beta_star_hi]
        return ",".join("" if v is None else repr(float(v)) for v in cells)


def _site_terms(field, nbhd, params):
    center, nsum = center_and_neighbor_sums(as_field(field), nbhd)
    d = center - params.mu
    s = nsum - nbhd.k * params.mu
    return d, s


def _to_map(field, nbhd, flat):
    h, w = np.shape(field)
    if nbhd.boundary == INTERIOR:
        values = np.full((h, w), np.nan)
        values[1:h - 1, 1:w - 1] = flat.reshape(h - 2, w - 2)
    else:
        values = flat.reshape(h, w)
    return values, np.isfinite(values)


def local_phi_map(field, nbhd, params: ModelParams) -> InfoMap:
    """Squared per-site score of the local log conditional density."""
    d, s = _site_terms(field, nbhd, params)
    phi = ((d - params.beta * s) * s / params.sigma2) ** 2
    values, defined = _to_map(field, nbhd, phi)
    return InfoMap(PHI, values, defined, params)


def local_psi_map(field, nbhd, params: ModelParams) -> InfoMap:
    """Per-site curvature of the local log conditional density; beta-free."""
    _, s = _site_terms(field, nbhd, params)
    values, defined = _to_map(field, nbhd, s * s / params.sigma2)
    return InfoMap(PSI, values, defined, params)


def l_information_map(phi: InfoMap, psi: InfoMap, eps: float = 1e-10) -> InfoMap:
    if phi.shape != psi.shape:
        raise InvalidArgumentError(f"map shapes differ: {phi.shape} vs {psi.shape}")
    if phi.params != psi.params:
        raise InvalidArgumentError("phi and psi maps were computed with different parameters")
    defined = phi.defined & psi.defined
    defined &= np.where(defined, psi.values, 0.0) > eps
    values = np.full(phi.shape, np.nan)
    values[defined] = phi.values[defined] / (psi.values[defined] + eps)
    return InfoMap(LINFO, values, defined, phi.params)


def plus_sums(cov: PatternCovariance):
    """Entry sums (||rho rho^T||, ||rho^T (x) S-||, ||S- (x) S-||) of the Kronecker terms."""
    s, S = cov.rho_sum, cov.minus_sum
    return s * s, s * S, S * S


def _score_moment(cov, beta, first_term_var):
    rr, rs, ss = plus_sums(cov)
    return first_term_var * cov.minus_sum + 2.0 * rr - 6.0 * beta * rs + 3.0 * beta * beta * ss


def expected_phi(cov: PatternCovariance, params: ModelParams, first_term_var: float | None = None) -> float:
    """Expected squared pseudo-likelihood score.

    ``first_term_var`` is the variance multiplying the neighbour-block sum in
    the leading term; it defaults to ``params.sigma2``.
    """
    var = params.sigma2 if first_term_var is None else first_term_var
    return _score_moment(cov, params.beta, var) / params.sigma2 ** 2


def expected_psi(cov: PatternCovariance, params: ModelParams) -> float:
    return cov.minus_sum / params.sigma2


def info_gap(cov: PatternCovariance, params: ModelParams) -> float:
    rr, rs, ss = plus_sums(cov)
    b = params.beta
    return (2.0 * rr - 6.0 * b * rs + 3.0 * b * b * ss) / params.sigma2 ** 2


def beta_star(cov: PatternCovariance):
    """Both beta values that zero the information gap, as ``(lo, hi)``.

    Returns None when the quadratic has no real root.
    """
    rr, rs, ss = plus_sums(cov)
    if ss == 0:
        raise DegenerateCovarianceError("neighbour covariance block sums to zero")
    disc = 3.0 * rs * rs - 2.0 * ss * rr
    if disc < 0:
        return None
    half = math.sqrt(3.0) / 3.0 * math.sqrt(disc) / ss
    centre = rs / ss
    return centre - half, centre + half


def asymptotic_variance(cov: PatternCovariance, params: ModelParams, first_term_var: float | None = None) -> float:
    S = cov.minus_sum
    if S == 0:
        raise DegenerateCovarianceError("neighbour covariance block sums to zero")
    var = params.sigma2 if first_term_var is None else first_term_var
    return _score_moment(cov, params.beta, var) / (S * S)
