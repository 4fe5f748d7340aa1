"""Quadrature and monotone root finding used by the density algebra.

Everything here works on plain callables so that it can be exercised in
isolation from the density classes.
"""

import math
import warnings

import numpy as np
from scipy import integrate

from .exceptions import DivergenceError, QuadratureError

QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-12
# Subdivision limits tried in order; the last one is the hard refusal point.
_QUAD_LIMITS = (200, 20_000, 1_000_000)

ROOT_REL_TOL = 1e-10


def integrate_interval(f, a, b, *, epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, points=None):
    """Integrate a scalar function over the finite interval [a, b].

    Raises:
        QuadratureError: if no subdivision budget reaches the tolerance.
    """
    if b <= a:
        return 0.0
    if points is not None:
        points = [p for p in points if a < p < b] or None
    last = None
    for limit in _QUAD_LIMITS:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                value, err = integrate.quad(
                    f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, points=points
                )
            except integrate.IntegrationWarning as exc:
                last = exc
                continue
        if not math.isfinite(value):
            raise QuadratureError(a, b, "non-finite integral")
        return value
    raise QuadratureError(a, b, f"quadrature did not converge ({last})")


def geometric_tail(increments, ratio_cut=0.9, window=10):
    """Classify a sequence of positive increments over doubling intervals.

    Returns the estimated remaining sum past the last increment when the
    sequence decays at least geometrically with ratio ``ratio_cut`` over the
    last ``window`` terms, and ``None`` otherwise (treated as divergent).
    """
    inc = np.asarray(increments, dtype=float)
    if inc.size == 0:
        return None
    if inc[-1] <= 0.0:
        return 0.0
    if inc.size <= window or inc[-window - 1] <= 0.0:
        return None
    ratio = (inc[-1] / inc[-window - 1]) ** (1.0 / window)
    if ratio >= ratio_cut:
        return None
    return inc[-1] * ratio / (1.0 - ratio)


def integrate_to_infinity(f, r0, *, max_doublings=90, rel_stop=1e-14):
    """Integrate ``f`` over [r0, inf) by summing doubling segments.

    Raises:
        DivergenceError: if the segment contributions do not decay.
    """
    if r0 <= 0.0:
        raise ValueError("r0 must be positive")
    total = 0.0
    incs = []
    a = r0
    for _ in range(max_doublings):
        inc = integrate_interval(f, a, 2.0 * a)
        incs.append(inc)
        total += inc
        a *= 2.0
        if inc == 0.0 or (len(incs) > 10 and inc <= rel_stop * total):
            rest = geometric_tail(incs)
            if rest is not None:
                return total + rest
    rest = geometric_tail(incs)
    if rest is None:
        raise DivergenceError(f"integral over [{r0!r}, inf) does not converge")
    return total + rest


def mass_is_unbounded(cumulative, r_max=1e12):
    """Decide whether a cumulative mass function grows without bound.

    The increments of ``cumulative`` over the doubling sequence
    1, 2, 4, ... up to ``r_max`` must not vanish or decay geometrically.
    """
    k = int(math.ceil(math.log2(r_max)))
    radii = 2.0 ** np.arange(-10, k + 1)
    mu = np.asarray(cumulative(radii), dtype=float)
    inc = np.diff(mu)
    if not np.all(np.isfinite(mu)):
        return True
    return geometric_tail(inc) is None and inc[-1] > 0.0


def invert_monotone(func, q, *, x0=1.0, rtol=ROOT_REL_TOL, max_iter=400):
    """Vectorised generalised inverse ``sup{x >= 0: func(x) <= q}``.

    ``func`` must be non-decreasing, vectorised, unbounded and satisfy
    ``func(0) = 0``. A doubling/halving search brackets each target, then
    Illinois-style regula falsi with a forced bisection every third step
    narrows the bracket to relative width ``rtol``. The bracket invariant
    ``func(lo) <= q < func(hi)`` makes the result the supremum even across
    flat stretches.
    """
    q_arr = np.asarray(q, dtype=float)
    shape = q_arr.shape
    q_flat = q_arr.ravel()
    out = np.zeros(q_flat.shape)
    if np.any(q_flat < 0) or not np.all(np.isfinite(q_flat)):
        raise ValueError("targets must be finite and non-negative")

    todo = np.arange(q_flat.size)
    zero = q_flat == 0.0
    if np.any(zero):
        probe = np.asarray(func(np.array([x0 * 1e-12])), dtype=float)[0]
        if probe > 0.0:
            todo = todo[~zero]
    if todo.size == 0:
        return out.reshape(shape)

    qt = q_flat[todo]
    lo = np.zeros(todo.size)
    hi = np.full(todo.size, float(x0))
    f_hi = func(hi) - qt
    # grow hi until func(hi) > q
    for _ in range(2100):
        grow = f_hi <= 0
        if not grow.any():
            break
        lo[grow] = hi[grow]
        hi[grow] *= 2.0
        f_hi[grow] = func(hi[grow]) - qt[grow]
    else:
        raise DivergenceError("cumulative mass appears bounded; cannot bracket inverse")
    # shrink lo from below where the first probe already overshoots
    need = lo == 0.0
    cand = hi.copy()
    for _ in range(200):
        if not need.any():
            break
        cand[need] *= 0.5
        f_c = func(cand[need]) - qt[need]
        idx = np.flatnonzero(need)
        ok = f_c <= 0
        lo[idx[ok]] = cand[idx[ok]]
        hi[idx[~ok]] = cand[idx[~ok]]
        f_hi[idx[~ok]] = f_c[~ok]
        need[idx[ok]] = False
    f_lo = func(lo) - qt

    side = np.zeros(todo.size, dtype=np.int8)
    for it in range(max_iter):
        active = np.flatnonzero(hi - lo > rtol * hi)
        if active.size == 0:
            break
        a, b = lo[active], hi[active]
        fa, fb = f_lo[active], f_hi[active]
        if it % 3 == 2:
            x = 0.5 * (a + b)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                x = b - fb * (b - a) / (fb - fa)
            bad = ~(np.isfinite(x) & (x > a) & (x < b))
            x[bad] = 0.5 * (a[bad] + b[bad])
        fx = func(x) - qt[active]
        left = fx <= 0
        prev = side[active]
        # Illinois: damp the stale endpoint when the same side moves twice
        damp_hi = left & (prev == 1)
        damp_lo = ~left & (prev == 2)
        fb = np.where(damp_hi, 0.5 * fb, fb)
        fa = np.where(damp_lo, 0.5 * fa, fa)
        lo[active] = np.where(left, x, a)
        f_lo[active] = np.where(left, fx, fa)
        hi[active] = np.where(left, b, x)
        f_hi[active] = np.where(left, fb, fx)
        side[active] = np.where(left, 1, 2)
    out[todo] = 0.5 * (lo + hi)
    return out.reshape(shape)
