"""Compiled inner loops.  Every kernel consumes a ``numpy.random.Generator``
in place, so the Python-side generator advances exactly as far as the
kernel drew."""
import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def inarch_path(gen, beta, alpha, x0, n):
    out = np.empty(n + 1, dtype=np.int64)
    out[0] = x0
    prev = x0
    for t in range(1, n + 1):
        prev = gen.poisson(beta + alpha * prev)
        out[t] = prev
    return out


@njit(nogil=True, cache=True)
def cir_path(gen, beta, gamma, steps, x0):
    dt = 1.0 / steps
    sdt = np.sqrt(dt)
    xs = np.empty(steps + 1)
    dbs = np.empty(steps)
    x = x0
    xs[0] = x
    for i in range(steps):
        db = sdt * gen.standard_normal()
        xp = x if x > 0.0 else 0.0
        x = x + (beta - gamma * xp) * dt + np.sqrt(xp) * db
        if x < 0.0:
            x = 0.0
        xs[i + 1] = x
        dbs[i] = db
    return xs, dbs


@njit(nogil=True, cache=True)
def cir_functional(gen, beta, gamma, steps, x0):
    # same noise consumption and arithmetic as cir_path + itô sums
    dt = 1.0 / steps
    sdt = np.sqrt(dt)
    x = x0
    num = 0.0
    den = 0.0
    for i in range(steps):
        db = sdt * gen.standard_normal()
        xp = x if x > 0.0 else 0.0
        r = np.sqrt(xp)
        num += xp * r * db
        den += xp * xp * dt
        x = x + (beta - gamma * xp) * dt + r * db
        if x < 0.0:
            x = 0.0
    return num, den


@njit(nogil=True, cache=True)
def ito_sums(xs, dbs, dt):
    num = 0.0
    den = 0.0
    for i in range(dbs.shape[0]):
        xp = xs[i] if xs[i] > 0.0 else 0.0
        num += xp * np.sqrt(xp) * dbs[i]
        den += xp * xp * dt
    return num, den
