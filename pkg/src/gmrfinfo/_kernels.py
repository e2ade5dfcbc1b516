"""Compiled single-site update loops.

The kernels work on a flat site vector and a neighbour index table, so the
same code serves toroidal lattices and small hand-built graphs.  All random
numbers are drawn by the caller, which keeps runs reproducible from a numpy
Generator.
"""
import math

import numba
import numpy as np


@numba.njit(cache=True)
def conditional_mean(x, table, p, mu, beta):
    s = 0.0
    for o in range(table.shape[1]):
        s += x[table[p, o]] - mu
    return mu + beta * s


@numba.njit(cache=True)
def metropolis_log_ratio(current, proposal, cond_mean, sigma2):
    """Log ratio of the local conditional densities at proposal and current value."""
    a = proposal - cond_mean
    b = current - cond_mean
    return -(a * a - b * b) / (2.0 * sigma2)


@numba.njit(cache=True)
def gibbs_pass(x, table, order, mu, beta, sd, z):
    for t in range(order.shape[0]):
        p = order[t]
        x[p] = conditional_mean(x, table, p, mu, beta) + sd * z[t]


@numba.njit(cache=True)
def metropolis_pass(x, table, order, mu, beta, sigma2, tau, z, u):
    accepted = 0
    for t in range(order.shape[0]):
        p = order[t]
        m = conditional_mean(x, table, p, mu, beta)
        proposal = x[p] + tau * z[t]
        if math.log(u[t]) < metropolis_log_ratio(x[p], proposal, m, sigma2):
            x[p] = proposal
            accepted += 1
    return accepted


def torus_table(shape, offsets):
    """Flat neighbour indices for every site of a toroidal lattice."""
    h, w = shape
    ii, jj = np.mgrid[0:h, 0:w]
    cols = [(((ii + dy) % h) * w + (jj + dx) % w).ravel() for dy, dx in offsets]
    return np.ascontiguousarray(np.stack(cols, axis=1), dtype=np.int64)
