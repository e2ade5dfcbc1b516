"""Lattice fields, neighborhood systems and contextual pattern statistics.

A field is a plain 2-D ``float64`` numpy array.  Patterns are the values of
the 3x3 (order 2) or cross-shaped (order 1) window around every admitted
site, listed in raster order so the central element sits at a fixed
position of each pattern vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyPatternSetError,
    InsufficientDataError,
    InvalidArgumentError,
)

TOROIDAL = "toroidal"
INTERIOR = "interior"
BOUNDARIES = (TOROIDAL, INTERIOR)

# window offsets in raster order, centre included
_WINDOWS = {
    1: ((-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)),
    2: tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)),
}


def as_field(values, min_size: int = 3) -> np.ndarray:
    """Validate ``values`` as a lattice and return it as a float64 array."""
    field = np.asarray(values, dtype=np.float64)
    if field.ndim != 2:
        raise InvalidArgumentError(f"field must be 2-D, got shape {field.shape}")
    if field.shape[0] < min_size or field.shape[1] < min_size:
        raise InvalidArgumentError(
            f"field must be at least {min_size}x{min_size}, got {field.shape}"
        )
    if not np.all(np.isfinite(field)):
        raise InvalidArgumentError("field contains NaN or infinite values")
    return field


@dataclass(frozen=True)
class NeighborhoodSystem:
    order: int
    offsets: tuple  # neighbour (dy, dx) pairs, raster order, centre excluded
    window: tuple  # all window offsets in pattern order, centre included
    central_index: int
    boundary: str = TOROIDAL

    @property
    def k(self) -> int:
        return len(self.offsets)

    @property
    def K(self) -> int:
        return len(self.window)

    @property
    def margin(self) -> int:
        return 1


def make_neighborhood(order: int = 2, boundary: str = TOROIDAL) -> NeighborhoodSystem:
    """First order (4 neighbours) or second order (8 neighbours) system."""
    if order not in _WINDOWS:
        raise InvalidArgumentError(f"unsupported neighborhood order {order!r}; use 1 or 2")
    if boundary not in BOUNDARIES:
        raise InvalidArgumentError(f"unknown boundary policy {boundary!r}")
    window = _WINDOWS[order]
    central = window.index((0, 0))
    offsets = tuple(o for o in window if o != (0, 0))
    return NeighborhoodSystem(order, offsets, window, central, boundary)


@dataclass(frozen=True)
class PatternSet:
    rows: np.ndarray  # (N, K)
    site_index: np.ndarray  # (N, 2) lattice coordinate of each central element
    central_index: int
    field_mean: float

    def __len__(self):
        return self.rows.shape[0]


def _window_views(field, nbhd):
    """Yield one (N,) array per window position, aligned on the centre site."""
    h, w = field.shape
    m = nbhd.margin
    for dy, dx in nbhd.window:
        if nbhd.boundary == TOROIDAL:
            yield np.roll(field, (-dy, -dx), axis=(0, 1)).ravel()
        else:
            yield field[m + dy:h - m + dy, m + dx:w - m + dx].ravel()


def extract_patterns(field, nbhd: NeighborhoodSystem) -> PatternSet:
    field = np.asarray(field, dtype=np.float64)
    h, w = field.shape
    m = nbhd.margin
    if nbhd.boundary == INTERIOR and (h <= 2 * m or w <= 2 * m):
        raise EmptyPatternSetError(f"no interior site fits a 3x3 window in a {h}x{w} field")
    if nbhd.boundary == TOROIDAL and (h < 3 or w < 3):
        raise EmptyPatternSetError(f"toroidal windows need at least 3x3, got {h}x{w}")
    rows = np.stack(list(_window_views(field, nbhd)), axis=1)
    if nbhd.boundary == TOROIDAL:
        ii, jj = np.mgrid[0:h, 0:w]
    else:
        ii, jj = np.mgrid[m:h - m, m:w - m]
    sites = np.column_stack([ii.ravel(), jj.ravel()])
    return PatternSet(rows, sites, nbhd.central_index, float(field.mean()))


def center_and_neighbor_sums(field, nbhd: NeighborhoodSystem):
    """Central values and raw neighbour sums, one entry per admitted site."""
    field = np.asarray(field, dtype=np.float64)
    views = list(_window_views(field, nbhd))
    center = views.pop(nbhd.central_index)
    total = np.zeros_like(center)
    for v in views:
        total += v
    return center, total


@dataclass(frozen=True)
class PatternCovariance:
    sigma_p: np.ndarray
    sigma_p_minus: np.ndarray
    rho: np.ndarray
    sigma_ii: float
    mean_used: float
    central_index: int
    n_rows: int

    @property
    def K(self) -> int:
        return self.sigma_p.shape[0]

    @property
    def rho_sum(self) -> float:
        """Sum of the central-row covariances (without the central variance)."""
        return float(self.rho.sum())

    @property
    def minus_sum(self) -> float:
        """Sum of all entries of the neighbour-only covariance block."""
        return float(self.sigma_p_minus.sum())

    @classmethod
    def from_matrix(cls, sigma_p, central_index=None, mean_used=0.0, n_rows=1):
        """Split a full pattern covariance matrix into its derived parts."""
        sigma_p = np.array(sigma_p, dtype=np.float64)
        if sigma_p.ndim != 2 or sigma_p.shape[0] != sigma_p.shape[1]:
            raise InvalidArgumentError("pattern covariance must be square")
        K = sigma_p.shape[0]
        c = K // 2 if central_index is None else int(central_index)
        if not 0 <= c < K:
            raise InvalidArgumentError(f"central index {c} outside 0..{K - 1}")
        minus = np.delete(np.delete(sigma_p, c, axis=0), c, axis=1)
        rho = np.delete(sigma_p[c], c)
        return cls(sigma_p, minus, rho, float(sigma_p[c, c]), float(mean_used), c, int(n_rows))

    @classmethod
    def from_parts(cls, sigma_p_minus, rho, sigma_ii=1.0, central_index=None, mean_used=0.0):
        """Assemble from the neighbour block and the central covariance row."""
        minus = np.asarray(sigma_p_minus, dtype=np.float64)
        rho = np.asarray(rho, dtype=np.float64)
        k = minus.shape[0]
        c = (k + 1) // 2 if central_index is None else int(central_index)
        full = np.insert(np.insert(minus, c, 0.0, axis=0), c, 0.0, axis=1)
        full[c, :] = np.insert(rho, c, sigma_ii)
        full[:, c] = full[c, :]
        return cls.from_matrix(full, c, mean_used)


def pattern_covariance(patterns: PatternSet, mu: float | None = None) -> PatternCovariance:
    """Divide-by-N covariance of pattern vectors about one global scalar mean.

    With ``mu=None`` the field's sample mean is used.  Each pair of window
    positions is accumulated once and mirrored, so the result is exactly
    symmetric.
    """
    n = len(patterns)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 patterns, got {n}")
    mean = patterns.field_mean if mu is None else float(mu)
    dev = patterns.rows - mean
    K = dev.shape[1]
    sigma = np.empty((K, K))
    for a in range(K):
        for b in range(a, K):
            sigma[a, b] = sigma[b, a] = np.dot(dev[:, a], dev[:, b]) / n
    return PatternCovariance.from_matrix(sigma, patterns.central_index, mean, n)
