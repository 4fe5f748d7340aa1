"""Finite-grid checkers for sufficient conditions of C/I stochastic ordering.

Each checker compares two BS densities through their scale-matched versions:
for a probe mass ``q`` the first density is rescaled by
``a = mu2^-1(q) / mu1^-1(q)`` so that both place their q-th unit of mass at the
same distance.  A "holds" verdict only means no probe on the finite grid
violated the condition; it is never a proof.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_Q_MIN = 1e-4
DEFAULT_Q_MAX = 25.0
REL_TOL = 1e-9
# Relative jitter in r applied when testing a probe, so that densities with
# jumps are not reported as violated because r/a lands one ulp across a jump.
POSITION_JITTER = 1e-9


class Status(str, enum.Enum):
    HOLDS_ON_GRID = "holds_on_grid"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class Condition(str, enum.Enum):
    THEOREM1 = "theorem1"
    MONOTONE_DIFF = "monotone_diff"
    BETA_FACTOR = "beta_factor"


@dataclass(frozen=True)
class ProbeGrid:
    """Where the ordering conditions are probed.

    Attributes:
        q_grid: strictly increasing positive masses. The default spans the
            bulk of an Exp(1) law, which is the law of mu(R1).
        r_points_per_q: number of log-spaced distances per mass.
        r_max_factor: the r sweep ends at this multiple of mu2^-1(q_max).
    """

    q_grid: tuple = tuple(np.geomspace(DEFAULT_Q_MIN, DEFAULT_Q_MAX, 200).tolist())
    r_points_per_q: int = 400
    r_max_factor: float = 100.0

    def __post_init__(self):
        q = tuple(float(x) for x in np.atleast_1d(self.q_grid))
        if len(q) < 2 or q[0] <= 0 or any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("q_grid must hold >= 2 strictly increasing positive masses")
        if self.r_points_per_q < 2:
            raise ValueError("r_points_per_q must be >= 2")
        if not self.r_max_factor >= 1.0:
            raise ValueError("r_max_factor must be >= 1")
        object.__setattr__(self, "q_grid", q)

    @classmethod
    def log_spaced(cls, q_min=DEFAULT_Q_MIN, q_max=DEFAULT_Q_MAX, n_q=200, **kw):
        return cls(tuple(np.geomspace(q_min, q_max, n_q).tolist()), **kw)

    @property
    def q(self):
        return np.asarray(self.q_grid)

    def to_config(self):
        return {
            "q_min": self.q_grid[0],
            "q_max": self.q_grid[-1],
            "n_q": len(self.q_grid),
            "r_points_per_q": self.r_points_per_q,
            "r_max_factor": self.r_max_factor,
        }


@dataclass(frozen=True)
class OrderingVerdict:
    """Outcome of one grid check.

    ``relation`` states the C/I order of the first system relative to the
    second that the verdict supports: ``"<="``, ``">="``, ``"=="`` or ``None``.
    """

    status: Status
    condition: Condition
    relation: str | None
    tolerance: float = REL_TOL
    probes: int = 0
    witness: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def holds(self):
        return self.status is Status.HOLDS_ON_GRID

    def to_dict(self):
        return {
            "status": self.status.value,
            "condition": self.condition.value,
            "relation": self.relation,
            "grid_sufficient_only": True,
            "tolerance": self.tolerance,
            "probes": self.probes,
            "witness": self.witness,
            "reason": self.reason,
        }


def _jittered(fn, r):
    """lambda at r and at r*(1 -+ jitter); returns (min, max) over the three."""
    vals = np.stack(
        [
            np.asarray(fn(r * (1.0 - POSITION_JITTER)), dtype=float),
            np.asarray(fn(r), dtype=float),
            np.asarray(fn(r * (1.0 + POSITION_JITTER)), dtype=float),
        ]
    )
    return vals.min(axis=0), vals.max(axis=0)


def _scale_ratios(lam1, lam2, q):
    m1 = np.asarray(lam1.inverse_cumulative(q), dtype=float)
    m2 = np.asarray(lam2.inverse_cumulative(q), dtype=float)
    return m1, m2


def _degenerate(m1, m2):
    """Index of the first probe where either inverse is zero or not finite."""
    bad = ~np.isfinite(m1) | (m1 <= 0) | ~np.isfinite(m2) | (m2 <= 0)
    return int(np.flatnonzero(bad)[0]) if bad.any() else None


def check_theorem1(lam1, lam2, grid=None):
    """Check ``(1/a) lam1(r/a) >= lam2(r)`` for all r >= mu2^-1(q), every probe q.

    A pass supports ``C/I | lam1 <=st C/I | lam2``.
    """
    grid = grid or ProbeGrid()
    q = grid.q
    m1, m2 = _scale_ratios(lam1, lam2, q)
    bad = _degenerate(m1, m2)
    if bad is not None:
        return OrderingVerdict(
            Status.INCONCLUSIVE,
            Condition.THEOREM1,
            None,
            reason=f"mu^-1(q) vanished or overflowed at q={float(q[bad])!r}; the scale ratio is undefined",
        )
    r_end = grid.r_max_factor * m2[-1]
    probes = 0
    for qi, a1, a2 in zip(q, m1, m2):
        a = a2 / a1
        r = np.geomspace(a2, max(r_end, a2 * (1.0 + 1e-12)), grid.r_points_per_q)
        lhs_lo, lhs_hi = _jittered(lambda x: np.asarray(lam1.intensity(x / a)) / a, r)
        rhs_lo, rhs_hi = _jittered(lam2.intensity, r)
        probes += r.size
        scale = np.maximum(np.abs(lhs_hi), np.abs(rhs_lo))
        fail = lhs_hi < rhs_lo - REL_TOL * scale
        if np.any(fail):
            j = int(np.flatnonzero(fail)[0])
            return OrderingVerdict(
                Status.VIOLATED,
                Condition.THEOREM1,
                None,
                probes=probes,
                witness={
                    "q": float(qi),
                    "r": float(r[j]),
                    "a": float(a),
                    "lhs": float(np.asarray(lam1.intensity(r[j] / a)) / a),
                    "rhs": float(lam2.intensity(r[j])),
                },
            )
    return OrderingVerdict(Status.HOLDS_ON_GRID, Condition.THEOREM1, "<=", probes=probes)


def check_monotone_diff(lam1, lam2, grid=None):
    """Check that ``(1/a) lam1(r/a) - lam2(r)`` is non-decreasing in r for every probe q.

    A pass supports ``C/I | lam1 <=st C/I | lam2`` (and implies the
    :func:`check_theorem1` condition on the same probes).
    """
    grid = grid or ProbeGrid()
    q = grid.q
    m1, m2 = _scale_ratios(lam1, lam2, q)
    bad = _degenerate(m1, m2)
    if bad is not None:
        return OrderingVerdict(
            Status.INCONCLUSIVE,
            Condition.MONOTONE_DIFF,
            None,
            reason=f"mu^-1(q) vanished or overflowed at q={float(q[bad])!r}; the scale ratio is undefined",
        )
    r_end = grid.r_max_factor * m2[-1]
    r_start = 1e-3 * m2[0]
    # the shared grid always contains mu2^-1(q) for the q being probed
    base = np.geomspace(r_start, r_end, grid.r_points_per_q)
    probes = 0
    for qi, a1, a2 in zip(q, m1, m2):
        a = a2 / a1
        r = np.union1d(base, [a2])
        lhs_lo, lhs_hi = _jittered(lambda x: np.asarray(lam1.intensity(x / a)) / a, r)
        rhs_lo, rhs_hi = _jittered(lam2.intensity, r)
        d_lo = lhs_lo - rhs_hi
        d_hi = lhs_hi - rhs_lo
        probes += r.size
        with np.errstate(invalid="ignore"):
            ok_vals = np.isfinite(d_lo) & np.isfinite(d_hi)
        r, d_lo, d_hi = r[ok_vals], d_lo[ok_vals], d_hi[ok_vals]
        mags = np.maximum(np.abs(lhs_hi), np.abs(rhs_hi))[ok_vals]
        scale = np.maximum.accumulate(mags)
        running = np.maximum.accumulate(d_lo)
        fail = d_hi[1:] < running[:-1] - REL_TOL * scale[1:]
        if np.any(fail):
            j = int(np.flatnonzero(fail)[0]) + 1
            return OrderingVerdict(
                Status.VIOLATED,
                Condition.MONOTONE_DIFF,
                None,
                probes=probes,
                witness={
                    "q": float(qi),
                    "r": float(r[j]),
                    "a": float(a),
                    "delta_at_r": float(0.5 * (d_lo[j] + d_hi[j])),
                    "earlier_max_delta": float(running[j - 1]),
                },
            )
    return OrderingVerdict(Status.HOLDS_ON_GRID, Condition.MONOTONE_DIFF, "<=", probes=probes)


def classify_monotone(values, rel_tol=REL_TOL):
    """Return ``(non_increasing, non_decreasing)`` for a sampled sequence."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    tol = rel_tol * np.maximum(np.abs(v[1:]), np.abs(v[:-1]))
    return bool(np.all(d <= tol)), bool(np.all(d >= -tol))


def check_beta_factor(base, beta, grid=None):
    """Classify a positive factor ``beta`` multiplying a power-law density.

    Non-increasing ``beta`` supports ``C/I | base <=st C/I | beta*base``;
    non-decreasing ``beta`` supports the reverse; a constant supports
    equality; anything else is inconclusive.

    Raises:
        ValueError: if ``beta`` is not positive on the grid.
    """
    grid = grid or ProbeGrid()
    q = grid.q
    r_lo = 1e-3 * float(base.inverse_cumulative(q[0]))
    r_hi = grid.r_max_factor * float(base.inverse_cumulative(q[-1]))
    n = grid.r_points_per_q * 4
    r = np.geomspace(r_lo, r_hi, n)
    # keep both one-sided values at each discontinuity of beta
    jumps = [b for b in getattr(beta, "discontinuities", lambda: ())() if r_lo < b < r_hi]
    if jumps:
        r = np.union1d(r, [b * (1.0 + 1e-12) for b in jumps] + list(jumps))
    vals = np.asarray(beta(r), dtype=float)
    if np.any(~np.isfinite(vals) | (vals <= 0)):
        j = int(np.flatnonzero(~np.isfinite(vals) | (vals <= 0))[0])
        raise ValueError(f"beta must be positive; beta({r[j]!r}) = {vals[j]!r}")
    non_inc, non_dec = classify_monotone(vals)
    witness = {"r_min": float(r[0]), "r_max": float(r[-1]), "beta_min": float(vals.min()),
               "beta_max": float(vals.max()), "non_increasing": non_inc, "non_decreasing": non_dec}
    if non_inc and non_dec:
        relation = "=="
    elif non_inc:
        relation = "<="
    elif non_dec:
        relation = ">="
    else:
        return OrderingVerdict(
            Status.INCONCLUSIVE,
            Condition.BETA_FACTOR,
            None,
            probes=r.size,
            witness=witness,
            reason="beta is neither non-increasing nor non-decreasing on the grid",
        )
    return OrderingVerdict(
        Status.HOLDS_ON_GRID, Condition.BETA_FACTOR, relation, probes=r.size, witness=witness
    )


def compare(lam1, lam2, grid=None):
    """Run Theorem-1 checks in both directions and summarise the supported relation."""
    fwd = check_theorem1(lam1, lam2, grid)
    rev = check_theorem1(lam2, lam1, grid)
    if fwd.holds and rev.holds:
        relation = "=="
    elif fwd.holds:
        relation = "<="
    elif rev.holds:
        relation = ">="
    else:
        relation = None
    return relation, fwd, rev
