"""Seeded MCMC simulation of GMRF outcomes and the beta-schedule experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import _kernels
from .analysis import summarize
from .errors import InvalidArgumentError
from .estimation import ModelParams
from .field import TOROIDAL, as_field, make_neighborhood

GIBBS, METROPOLIS = "gibbs", "metropolis"
RASTER, RANDOM = "raster", "random"
ZERO, BETA_STAR_MIN = "zero", "beta_star_min"


def init_white_noise(height: int, width: int, mu: float, sigma2: float, seed) -> np.ndarray:
    """I.i.d. N(mu, sigma2) lattice; the same seed always gives the same field."""
    return _white_noise(np.random.default_rng(seed), height, width, mu, sigma2)


def _white_noise(rng, height, width, mu, sigma2):
    if not sigma2 > 0:
        raise InvalidArgumentError(f"sigma2 must be positive, got {sigma2}")
    if height < 3 or width < 3:
        raise InvalidArgumentError(f"lattice must be at least 3x3, got {height}x{width}")
    return mu + math.sqrt(sigma2) * rng.standard_normal((height, width))


class Chain:
    """A lattice state plus the generator that drives its updates."""

    def __init__(self, field, nbhd, rng, mode=GIBBS, tau=None, scan=RASTER):
        if nbhd.boundary != TOROIDAL:
            raise InvalidArgumentError("the sampler requires a toroidal neighborhood")
        if mode not in (GIBBS, METROPOLIS):
            raise InvalidArgumentError(f"unknown sampler mode {mode!r}")
        if scan not in (RASTER, RANDOM):
            raise InvalidArgumentError(f"unknown scan order {scan!r}")
        if tau is not None and not tau >= 0:
            raise InvalidArgumentError(f"proposal scale must be non-negative, got {tau}")
        field = as_field(field)
        self.shape = field.shape
        self.x = field.ravel().copy()
        self.nbhd = nbhd
        self.rng = rng
        self.mode = mode
        self.tau = tau
        self.scan = scan
        self.table = _kernels.torus_table(self.shape, nbhd.offsets)
        self._raster = np.arange(self.x.size, dtype=np.int64)

    @property
    def field(self) -> np.ndarray:
        return self.x.reshape(self.shape).copy()

    def sweep(self, params: ModelParams) -> float:
        """One full lattice pass; returns the acceptance rate."""
        n = self.x.size
        order = self.rng.permutation(n) if self.scan == RANDOM else self._raster
        z = self.rng.standard_normal(n)
        if self.mode == GIBBS:
            _kernels.gibbs_pass(self.x, self.table, order, params.mu, params.beta,
                                math.sqrt(params.sigma2), z)
            return 1.0
        u = self.rng.random(n)
        tau = math.sqrt(params.sigma2) if self.tau is None else self.tau
        accepted = _kernels.metropolis_pass(self.x, self.table, order, params.mu, params.beta,
                                            params.sigma2, tau, z, u)
        return accepted / n


def sweep(field, nbhd, params: ModelParams, rng, mode=GIBBS, tau=None, scan=RASTER,
          return_acceptance=False):
    """Update every site once and return the new field.

    Gibbs mode draws each site from its exact conditional; Metropolis mode
    proposes a N(0, tau^2) step (tau defaults to sqrt(sigma2)).  ``rng`` is
    advanced in place.
    """
    chain = Chain(field, nbhd, rng, mode, tau, scan)
    rate = chain.sweep(params)
    return (chain.field, rate) if return_acceptance else chain.field


@dataclass(frozen=True)
class ScheduleConfig:
    beta_start: float = 0.0
    beta_max: float = 0.15
    d_beta: float = 0.001
    sweeps: int = 300
    record_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.beta_start <= self.beta_max:
            raise InvalidArgumentError("need 0 <= beta_start <= beta_max")
        if not self.d_beta > 0:
            raise InvalidArgumentError("d_beta must be positive")
        if int(self.sweeps) != self.sweeps or self.sweeps < 1:
            raise InvalidArgumentError("sweeps must be a positive integer")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InvalidArgumentError("record_every must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")


def triangle_schedule(config: ScheduleConfig):
    """Beta for each sweep: up by d_beta to beta_max, down to 0, repeat."""
    top = max(1, math.ceil(config.beta_max / config.d_beta - 1e-9))
    level = min(round(config.beta_start / config.d_beta), top)
    step = 1 if level < top else -1
    for _ in range(int(config.sweeps)):
        yield min(level * config.d_beta, config.beta_max)
        level += step
        if level >= top:
            level, step = top, -1
        elif level <= 0:
            level, step = 0, 1


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    beta_true: float
    beta_hat: float
    phi: float
    psi: float
    entropy: float
    linfo: float
    asym_var: float
    beta_star_lo: float | None
    beta_star_hi: float | None

    CSV_HEADER = "iter,beta_true,beta_hat,phi,psi,entropy,linfo,var,beta_star_lo,beta_star_hi"

    def to_csv_row(self) -> str:
        cells = []
        for f in fields(self):
            v = getattr(self, f.name)
            cells.append("" if v is None else str(v) if f.name == "iteration" else repr(float(v)))
        return ",".join(cells)


@dataclass(frozen=True)
class PerturbationResult:
    records: list
    mode_used: str
    beta_override: float
    fell_back: bool


def _record(t, beta_true, field, nbhd, variance):
    report, _, info = summarize(field, nbhd, variance)
    return TrajectoryRecord(t, beta_true, report.params.beta, info.phi_expected, info.psi_expected,
                            info.entropy, info.l_global, info.asym_var,
                            info.beta_star_lo, info.beta_star_hi)


def _run(config, model, shape, nbhd, mode, variance, snapshot, perturb):
    nbhd = make_neighborhood(2) if nbhd is None else nbhd
    rng = np.random.default_rng(config.seed)
    h, w = shape
    chain = Chain(_white_noise(rng, h, w, model.mu, model.sigma2), nbhd, rng, mode)
    records = []
    override = None
    for t, beta in enumerate(triangle_schedule(config)):
        if perturb is not None and t == perturb.start:
            override = perturb.choose(chain.field, nbhd, variance)
        if override is not None and perturb.start <= t < perturb.start + perturb.hold:
            beta = override
        chain.sweep(model.replace(beta=beta))
        if t % config.record_every == 0:
            records.append(_record(t, beta, chain.field, nbhd, variance))
            if snapshot is not None:
                snapshot(t, len(records), chain.field)
    return records


def run_schedule(config: ScheduleConfig, model: ModelParams, shape, nbhd=None, mode=GIBBS,
                 variance="central", snapshot=None):
    """Simulate under the triangle beta schedule and record global measures.

    Sigma2 and mu stay at ``model``'s values; only beta is scheduled.
    ``snapshot(iteration, n_records, field)`` is called after each record.
    """
    return _run(config, model, shape, nbhd, mode, variance, snapshot, None)


class _Perturbation:
    def __init__(self, mode, start, hold):
        self.mode = mode
        self.start = start
        self.hold = hold
        self.mode_used = mode
        self.value = 0.0
        self.fell_back = False

    def choose(self, field, nbhd, variance):
        if self.mode == BETA_STAR_MIN:
            _, _, info = summarize(field, nbhd, variance)
            if info.beta_star_lo is None:
                self.fell_back = True
                self.mode_used = ZERO
            else:
                self.value = info.beta_star_lo
        return self.value


def perturb_experiment(config: ScheduleConfig, model: ModelParams, shape, mode=ZERO,
                       perturb_at: int = 0, hold: int = 5, nbhd=None, sampler=GIBBS,
                       variance="central", snapshot=None) -> PerturbationResult:
    """Run the schedule but force beta for ``hold`` sweeps from ``perturb_at``.

    ``mode="beta_star_min"`` uses the smaller equilibrium root computed from
    the field at ``perturb_at``; if no real root exists the run falls back to
    zero and ``fell_back`` is set.  The schedule clock keeps running during
    the hold.
    """
    if mode not in (ZERO, BETA_STAR_MIN):
        raise InvalidArgumentError(f"unknown perturbation mode {mode!r}")
    if not 0 <= perturb_at < config.sweeps:
        raise InvalidArgumentError(f"perturb_at={perturb_at} outside the run of {config.sweeps} sweeps")
    if hold < 0:
        raise InvalidArgumentError("hold must be non-negative")
    perturb = _Perturbation(mode, perturb_at, hold)
    records = _run(config, model, shape, nbhd, sampler, variance, snapshot, perturb if hold else None)
    return PerturbationResult(records, perturb.mode_used, perturb.value, perturb.fell_back)
