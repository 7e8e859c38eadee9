"""Compiled coordinate-descent epoch.

Arithmetic mirrors :func:`posylasso.solver.univariate_solve` and
:func:`posylasso.solver.coordinate_update` operation for operation; the test
suite checks the two paths agree.
"""

import math

import numpy as np
from numba import njit

DENOM_FLOOR = 1e-300

# status codes returned by run_epoch
OK = 0
NONFINITE = 1
CONTRADICTION = 2


@njit(cache=True, nogil=True)
def univariate(b, a, s, lam, nonneg):
    if s < 0.0:
        s = 0.0
    ynorm = math.sqrt(s)
    if nonneg:
        if b <= lam * ynorm:
            return 0.0
    elif abs(b) <= lam * ynorm:
        return 0.0
    denom = a - lam * lam
    if denom < DENOM_FLOOR:
        return np.nan
    x_ls = b / a
    disc = a * s - b * b
    if disc < 0.0:
        disc = 0.0
    shrink = lam / a * math.sqrt(disc / denom)
    if x_ls > 0:
        z = x_ls - shrink
    else:
        z = x_ls + shrink
    if (z > 0) != (x_ls > 0) or z == 0:
        return 0.0
    return z


@njit(cache=True, nogil=True)
def _column(i, phi, phi_t, sigma2, slots, slot_of, owner, stamp, counters, scratch):
    counters[0] += 1
    s = slot_of[i]
    if s >= 0:
        counters[1] += 1
        stamp[s] = counters[0]
        return slots[s]
    counters[2] += 1
    if slots.shape[0] > 0:
        # first free slot, else least recently used
        s = -1
        for k in range(owner.shape[0]):
            if owner[k] < 0:
                s = k
                break
        if s < 0:
            s = 0
            for k in range(1, stamp.shape[0]):
                if stamp[k] < stamp[s]:
                    s = k
            slot_of[owner[s]] = -1
        out = slots[s]
        owner[s] = i
        slot_of[i] = s
        stamp[s] = counters[0]
    else:
        out = scratch
    out[:] = np.dot(phi_t, phi[:, i])
    out[i] += sigma2
    return out


@njit(cache=True, nogil=True)
def run_epoch(order, phi, phi_t, phi_sq, lam, nonneg, sigma2, x, h, c,
              slots, slot_of, owner, stamp, counters, scratch):
    """One cyclic sweep over ``order``; updates x and h in place.

    Returns (c, max_abs_delta, status, offending_index).
    """
    max_delta = 0.0
    for t in range(order.shape[0]):
        i = order[t]
        a = phi_sq[i]
        xi = x[i]
        hi = h[i]
        b = a * xi - hi
        s = a * xi * xi + c - 2.0 * xi * hi
        if not (math.isfinite(b) and math.isfinite(s)):
            return c, max_delta, NONFINITE, i
        z = univariate(b, a, s, lam[i], nonneg)
        if math.isnan(z):
            return c, max_delta, CONTRADICTION, i
        delta = z - xi
        if delta == 0.0:
            continue
        x[i] = z
        c = c + a * delta * delta + 2.0 * delta * hi
        if c < 0.0:
            c = 0.0
        col = _column(i, phi, phi_t, sigma2, slots, slot_of, owner, stamp, counters, scratch)
        for j in range(h.shape[0]):
            h[j] += delta * col[j]
        if not math.isfinite(c):
            return c, max_delta, NONFINITE, i
        if abs(delta) > max_delta:
            max_delta = abs(delta)
    return c, max_delta, OK, -1
