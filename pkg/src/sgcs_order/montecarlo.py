"""Seeded Monte Carlo for C/I at the origin of a 1-D shotgun cellular system.

Point processes are generated by time change: the arrival times of a unit-rate
Poisson process are mapped through the generalised inverse of the cumulative
density.  For C/I sampling the first ``near_points`` arrivals are placed
exactly; the remaining mass up to the truncation radius is split into
geometric bins whose Poisson counts are multiplied by the exact bin-average
received power.  That keeps every realization at a fixed, small cost while
reproducing the far-field interference mean exactly and its variance to
within-bin resolution.

Determinism contract: the sample index range is cut into ``cfg.chunks``
fixed chunks; chunk ``i`` draws from ``SeedSequence(seed).spawn(chunks)[i]``
and outputs are concatenated in chunk order, so the worker count never
changes a single bit of the result.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from ._numerics import integrate_to_infinity
from .densities import (
    Density,
    DiscreteMarks,
    Faded,
    MarkDistribution,
    PathLossModel,
    PowerLaw,
    PowerLawLoss,
    UnitMarks,
    as_pathloss,
    fading_transform,
    sup_intensity,
)
from .exceptions import DivergenceError, DivergentTailError

DEFAULT_DELTA = 1e-4
DEFAULT_DELTA_STAT = 0.01
SURVIVAL_GRID_POINTS = 512
# 3-point Gauss-Legendre rule used for far-field bin averages.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class SimConfig:
    """Settings for :func:`sample_ci`.

    ``pathloss`` overrides the power law ``r**eps`` when given. ``mark_mode``
    is ``"auto"`` (fold marks into the density when that stays cheap and
    exact), ``"transform"`` or ``"raw"`` (sample a mark per BS).
    """

    n_samples: int = 100_000
    seed: int = 0
    eps: float = 4.0
    marks: MarkDistribution = field(default_factory=UnitMarks)
    pathloss: PathLossModel | None = None
    r_max: float | None = None
    delta: float = DEFAULT_DELTA
    chunks: int = 16
    mark_mode: str = "auto"
    near_points: int = 512
    far_bins: int = 48

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValueError("eps must be positive")
        if self.r_max is None and not 0 < self.delta < 1:
            raise ValueError("tail budget delta must lie in (0, 1)")
        if self.r_max is not None and not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if self.chunks < 1 or self.near_points < 2 or self.far_bins < 1:
            raise ValueError("chunks >= 1, near_points >= 2 and far_bins >= 1 are required")
        if self.mark_mode not in ("auto", "transform", "raw"):
            raise ValueError("mark_mode must be 'auto', 'transform' or 'raw'")

    @property
    def loss(self):
        return self.pathloss if self.pathloss is not None else PowerLawLoss(self.eps)

    def to_config(self):
        return {
            "n_samples": int(self.n_samples),
            "seed": int(self.seed),
            "eps": float(self.eps),
            "marks": self.marks.to_config(),
            "pathloss": None if self.pathloss is None else self.pathloss.to_config(),
            "r_max": self.r_max,
            "delta": float(self.delta),
            "chunks": int(self.chunks),
            "mark_mode": self.mark_mode,
            "near_points": int(self.near_points),
            "far_bins": int(self.far_bins),
        }


@dataclass(frozen=True)
class Realization:
    """One draw of BS distances in [0, window], ascending, with per-BS marks."""

    distances: np.ndarray
    marks: np.ndarray | None = None
    eps: float | None = None

    @property
    def count(self):
        return int(self.distances.size)

    @property
    def effective_distances(self):
        """``R_i * W_i**(-1/eps)``; plain distances without marks."""
        if self.marks is None or self.eps is None:
            return self.distances
        return self.distances * self.marks ** (-1.0 / self.eps)


@dataclass(frozen=True)
class CiSampleSet:
    values: np.ndarray
    fingerprint: str = ""
    resampled: int = 0
    r_max: float = math.inf
    config: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        object.__setattr__(self, "values", v)

    @property
    def count(self):
        return int(self.values.size)

    def to_csv(self, path, header):
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for x in self.values:
                fh.write(f"{x:.17g}\n")


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


def chunk_seeds(seed, chunks):
    """Per-chunk seed sequences derived from the master seed by spawning."""
    return np.random.SeedSequence(int(seed)).spawn(int(chunks))


def derive_seed(seed, index):
    """Independent 64-bit child seed ``index`` of a master seed."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Point-process samplers
# ---------------------------------------------------------------------------


def sample_ppp(d, seed, window, *, block=256):
    """All points of the Poisson process with intensity ``d`` in [0, window].

    Time change: cumulative sums of unit exponentials below mu(window),
    mapped through mu^-1.
    """
    if not window > 0:
        raise ValueError("window must be positive")
    rng = _rng(seed)
    total = float(d.cumulative(window))
    arrivals = []
    last = 0.0
    while True:
        g = last + np.cumsum(rng.standard_exponential(block))
        inside = g[g <= total]
        arrivals.append(inside)
        if inside.size < block:
            break
        last = g[-1]
    gam = np.concatenate(arrivals)
    r = np.asarray(d.inverse_cumulative(gam), dtype=float)
    return Realization(np.minimum(r, window))


def sample_nearest(d, seed, n, k=1):
    """Distances of the ``k`` nearest BSs in ``n`` independent realizations, shape (n, k)."""
    rng = _rng(seed)
    gam = np.cumsum(rng.standard_exponential((int(n), int(k))), axis=1)
    return np.asarray(d.inverse_cumulative(gam), dtype=float)


def sample_ppp_thinning(d, seed, window, lam_max=None):
    """Reference sampler: thin a homogeneous process of rate ``lam_max``.

    Kept independent of mu and its inverse so it can check :func:`sample_ppp`.
    """
    rng = _rng(seed)
    lam_max = sup_intensity(d, window) if lam_max is None else float(lam_max)
    n = rng.poisson(lam_max * window)
    x = np.sort(rng.uniform(0.0, window, n))
    keep = rng.random(n) * lam_max < np.asarray(d.intensity(x))
    return Realization(x[keep])


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------


def reference_power(d, loss):
    """Received power at mu^-1(1), the typical nearest-BS distance."""
    loss = as_pathloss(loss)
    return 1.0 / float(loss.h(float(d.inverse_cumulative(1.0))))


def tail_interference(d, loss, radius):
    """Expected interference ``int_radius^inf lambda(s)/h(s) ds`` (Campbell)."""
    loss = as_pathloss(loss)
    if isinstance(d, PowerLaw) and isinstance(loss, PowerLawLoss):
        k = d.order
        if loss.eps <= k:
            return math.inf
        return d.coef * radius ** (k - loss.eps) / (loss.eps - k)
    try:
        return integrate_to_infinity(
            lambda s: float(d.intensity(s)) / float(loss.h(s)), radius
        )
    except DivergenceError:
        return math.inf


def truncation_radius(d, loss, delta=DEFAULT_DELTA, *, absolute=False):
    """Radius beyond which the expected interference is below the budget.

    The budget is ``delta`` times :func:`reference_power` (or ``delta``
    itself when ``absolute``).

    Raises:
        DivergentTailError: when the tail interference is infinite.
    """
    loss = as_pathloss(loss)
    if not delta > 0:
        raise ValueError("delta must be positive")
    budget = delta if absolute else delta * reference_power(d, loss)
    if isinstance(d, PowerLaw) and isinstance(loss, PowerLawLoss):
        k = d.order
        if loss.eps <= k:
            raise DivergentTailError(
                f"tail interference diverges: path-loss exponent {loss.eps:g} <= growth order {k:g}"
            )
        return (d.coef / ((loss.eps - k) * budget)) ** (1.0 / (loss.eps - k))

    r0 = float(d.inverse_cumulative(1.0))
    t0 = tail_interference(d, loss, r0)
    if not math.isfinite(t0):
        raise DivergentTailError("tail interference integral diverges for every radius")

    def excess(log_r):
        return math.log(max(tail_interference(d, loss, math.exp(log_r)), 1e-300)) - math.log(budget)

    lo = hi = math.log(r0)
    if t0 > budget:
        while excess(hi) > 0:
            lo, hi = hi, hi + math.log(2.0)
    else:
        while excess(lo) <= 0 and lo > math.log(r0) - 200:
            lo, hi = lo - math.log(2.0), lo
    return math.exp(optimize.brentq(excess, lo, hi, xtol=1e-9, rtol=1e-12))


# ---------------------------------------------------------------------------
# C/I sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Plan:
    density: Density
    loss: PathLossModel
    marks: MarkDistribution
    raw_marks: bool
    mass_window: float
    near_points: int
    far_bins: int
    mean_mark: float


def _resolve(d, cfg):
    loss = cfg.loss
    marks = cfg.marks
    raw = False
    if not marks.is_unit:
        mode = cfg.mark_mode
        power_law_loss = isinstance(loss, PowerLawLoss)
        if mode == "transform" and not power_law_loss:
            raise ValueError("the fading transform needs a power-law path loss")
        if mode == "auto":
            mode = "raw"
            if power_law_loss:
                try:
                    cand = fading_transform(d, marks, loss.eps)
                except DivergenceError:
                    cand = None
                # continuous marks over a non-power-law base would need a
                # quadrature per point; fall back to per-BS marks then
                if cand is not None and (not isinstance(cand, Faded) or isinstance(marks, DiscreteMarks)):
                    mode = "transform"
        if mode == "transform":
            d = fading_transform(d, marks, loss.eps)
            marks = UnitMarks()
        else:
            raw = True
    mean_mark = marks.moment(1.0)
    if raw and not math.isfinite(mean_mark):
        raise DivergenceError("raw marked simulation needs a finite mean mark E[W]")
    if cfg.r_max is not None:
        r_max = float(cfg.r_max)
    else:
        # raw marks scale the mean tail interference by E[W]
        r_max = truncation_radius(d, loss, cfg.delta / max(mean_mark, 1.0) if raw else cfg.delta)
        if raw:
            # a strongly faded-up far BS may still serve; widen by the mark tail
            w_hi = float(marks.quantile(0.9999))
            r_max = max(r_max, float(loss.inverse(float(loss.h(r_max)) * max(w_hi, 1.0))))
    return _Plan(
        density=d,
        loss=loss,
        marks=marks,
        raw_marks=raw,
        mass_window=float(d.cumulative(r_max)),
        near_points=int(cfg.near_points),
        far_bins=int(cfg.far_bins),
        mean_mark=float(mean_mark),
    ), r_max


def _power_at_mass(plan, m):
    r = np.asarray(plan.density.inverse_cumulative(m), dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / np.asarray(plan.loss.h(r), dtype=float)


def _far_field(plan, start, rng):
    """Interference from the mass interval (start, mass_window] per row."""
    top = plan.mass_window
    frac = np.arange(plan.far_bins + 1) / plan.far_bins
    log_lo = np.log(start)[:, None]
    log_edges = log_lo + (math.log(top) - log_lo) * frac
    edges = np.exp(log_edges)
    edges[:, -1] = top
    mass = np.diff(edges, axis=1)
    mid = 0.5 * (log_edges[:, 1:] + log_edges[:, :-1])
    half = 0.5 * (log_edges[:, 1:] - log_edges[:, :-1])
    integral = np.zeros_like(mass)
    for x, w in zip(_GL_X, _GL_W):
        m = np.exp(mid + half * x)
        integral += w * half * m * _power_at_mass(plan, m)
    counts = rng.poisson(mass)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(mass > 0, integral / mass, 0.0)
    return (counts * avg).sum(axis=1) * plan.mean_mark


def _draw(plan, k, rng):
    n = plan.near_points
    g = np.cumsum(rng.standard_exponential((k, n)), axis=1)
    inside = g <= plan.mass_window
    power = _power_at_mass(plan, np.minimum(g, plan.mass_window))
    if plan.raw_marks:
        power = power * plan.marks.sample(rng, (k, n))
    power[~inside] = 0.0
    count = inside.sum(axis=1)
    far = np.zeros(k)
    spill = inside[:, -1] & (g[:, -1] < plan.mass_window)
    if np.any(spill):
        far[spill] = _far_field(plan, g[spill, -1], rng)
    if plan.raw_marks:
        j = np.argmax(power, axis=1)
        rows = np.arange(k)
        carrier = power[rows, j].copy()
        power[rows, j] = 0.0
    else:
        carrier = power[:, 0].copy()
        power[:, 0] = 0.0
    interference = power.sum(axis=1) + far
    ok = (count >= 2) & (interference > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ci = carrier / interference
    return ci, ok


def _simulate_chunk(plan, m, seed_seq):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    out = np.empty(m)
    filled = 0
    resampled = 0
    while filled < m:
        ci, ok = _draw(plan, m - filled, rng)
        good = ci[ok]
        out[filled : filled + good.size] = good
        filled += good.size
        resampled += int((~ok).sum())
    return out, resampled


def sample_ci(d, cfg, *, workers=1):
    """Draw ``cfg.n_samples`` independent C/I values for density ``d``.

    Realizations with fewer than two BSs inside the window are redrawn and
    counted in ``resampled``.  ``workers`` only sets the thread count.

    Raises:
        DivergentTailError: if the truncation radius cannot be resolved.
    """
    plan, r_max = _resolve(d, cfg)
    n = int(cfg.n_samples)
    chunks = min(int(cfg.chunks), n)
    sizes = [n // chunks + (1 if i < n % chunks else 0) for i in range(chunks)]
    seeds = chunk_seeds(cfg.seed, chunks)
    if workers and workers > 1 and chunks > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            parts = list(pool.map(lambda a: _simulate_chunk(plan, *a), zip(sizes, seeds)))
    else:
        parts = [_simulate_chunk(plan, m, s) for m, s in zip(sizes, seeds)]
    values = np.concatenate([p[0] for p in parts])
    try:
        dens_cfg = d.to_config()
    except (TypeError, NotImplementedError):
        dens_cfg = repr(d)
    conf = {"density": dens_cfg, "simulation": cfg.to_config()}
    return CiSampleSet(
        values=values,
        fingerprint=config_hash(conf),
        resampled=sum(p[1] for p in parts),
        r_max=r_max,
        config=conf,
    )


def thinning_ci_oracle(d, loss, n, seed, window, *, marks=None, batch=2000, tail=True):
    """Brute-force C/I reference from thinned homogeneous points in [0, window].

    No use is made of mu or its inverse.  The expected interference beyond
    ``window`` is added as a constant when ``tail`` is set.
    """
    rng = _rng(seed)
    loss = as_pathloss(loss)
    marks = marks or UnitMarks()
    lam_max = sup_intensity(d, window)
    mean_mark = marks.moment(1.0)
    extra = 0.0
    if tail:
        val, _ = integrate.quad(
            lambda s: float(d.intensity(s)) / float(loss.h(s)), window, np.inf, limit=500
        )
        extra = mean_mark * val
    out = []
    have = 0
    while have < n:
        b = min(batch, n - have)
        counts = rng.poisson(lam_max * window, size=b)
        x = rng.uniform(0.0, window, counts.sum())
        keep = rng.random(x.size) * lam_max < np.asarray(d.intensity(x))
        with np.errstate(divide="ignore"):
            p = np.where(keep, 1.0 / np.asarray(loss.h(x)), 0.0)
        if not marks.is_unit:
            p = p * marks.sample(rng, x.size)
        row = np.repeat(np.arange(b), counts)
        kept = np.bincount(row, weights=keep, minlength=b)
        total = np.bincount(row, weights=p, minlength=b)
        nz = counts > 0
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        best = np.zeros(b)
        if x.size:
            best[nz] = np.maximum.reduceat(p, starts[nz])
        ok = kept >= 2
        ci = best[ok] / (total[ok] - best[ok] + extra)
        out.append(ci)
        have += ci.size
    return np.concatenate(out)[:n]


# ---------------------------------------------------------------------------
# Empirical comparison
# ---------------------------------------------------------------------------


def _values(s):
    v = s.values if isinstance(s, CiSampleSet) else np.asarray(s, dtype=float)
    if v.size == 0:
        raise ValueError("sample set is empty")
    return v


def empirical_survival(s, y_grid):
    """Fraction of samples strictly above each y."""
    v = np.sort(_values(s))
    y = np.asarray(y_grid, dtype=float)
    if np.any(np.diff(y) < 0):
        raise ValueError("y_grid must be sorted ascending")
    return 1.0 - np.searchsorted(v, y, side="right") / v.size


def ks_distance(s1, s2):
    """Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|."""
    a = np.sort(_values(s1))
    b = np.sort(_values(s2))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def dkw_halfwidth(n, delta_stat=DEFAULT_DELTA_STAT):
    """DKW band half-width for an n-sample empirical CDF at confidence 1 - delta_stat."""
    return math.sqrt(math.log(2.0 / delta_stat) / (2.0 * n))


class Dominance(str, enum.Enum):
    """Outcome of :func:`dominance_test` for the pair (s1, s2).

    ``DOMINATES`` means s2 dominates, i.e. s1 <=st s2; ``REVERSE_DOMINATES``
    means s1 >=st s2.
    """

    DOMINATES = "dominates"
    REVERSE_DOMINATES = "reverse_dominates"
    CROSSING = "crossing"
    INDISTINGUISHABLE = "indistinguishable"


_RELATION = {
    Dominance.DOMINATES: "<=",
    Dominance.REVERSE_DOMINATES: ">=",
    Dominance.INDISTINGUISHABLE: "==",
    Dominance.CROSSING: None,
}


@dataclass(frozen=True)
class DominanceResult:
    status: Dominance
    y: np.ndarray
    survival1: np.ndarray
    survival2: np.ndarray
    band: float
    delta_stat: float

    @property
    def relation(self):
        return _RELATION[self.status]

    @property
    def excess_1_over_2(self):
        """max_y S1(y) - S2(y); above ``band`` refutes s1 <=st s2."""
        return float(np.max(self.survival1 - self.survival2))

    @property
    def excess_2_over_1(self):
        return float(np.max(self.survival2 - self.survival1))

    def contradicts(self, relation):
        """True when the data refute ``relation`` between s1 and s2 beyond the band."""
        if relation == "<=":
            return self.excess_1_over_2 > self.band
        if relation == ">=":
            return self.excess_2_over_1 > self.band
        if relation == "==":
            return max(self.excess_1_over_2, self.excess_2_over_1) > self.band
        raise ValueError(f"unknown relation {relation!r}")

    def to_dict(self, include_curves=False):
        out = {
            "status": self.status.value,
            "relation": self.relation,
            "band": self.band,
            "delta_stat": self.delta_stat,
            "max_s1_minus_s2": self.excess_1_over_2,
            "max_s2_minus_s1": self.excess_2_over_1,
        }
        if include_curves:
            out["y"] = self.y.tolist()
            out["survival1"] = self.survival1.tolist()
            out["survival2"] = self.survival2.tolist()
        return out


def pooled_grid(*sets, points=SURVIVAL_GRID_POINTS):
    pooled = np.concatenate([_values(s) for s in sets])
    return np.quantile(pooled, np.linspace(0.0, 1.0, points))


def dominance_test(s1, s2, delta_stat=DEFAULT_DELTA_STAT, *, points=SURVIVAL_GRID_POINTS):
    """Compare two empirical survival curves with summed DKW bands."""
    if not 0 < delta_stat < 1:
        raise ValueError("delta_stat must lie in (0, 1)")
    v1, v2 = _values(s1), _values(s2)
    y = pooled_grid(v1, v2, points=points)
    S1 = empirical_survival(v1, y)
    S2 = empirical_survival(v2, y)
    band = dkw_halfwidth(v1.size, delta_stat) + dkw_halfwidth(v2.size, delta_stat)
    up = np.any(S1 > S2 + band)  # refutes s1 <=st s2
    down = np.any(S2 > S1 + band)  # refutes s1 >=st s2
    if up and down:
        status = Dominance.CROSSING
    elif down:
        status = Dominance.DOMINATES
    elif up:
        status = Dominance.REVERSE_DOMINATES
    else:
        status = Dominance.INDISTINGUISHABLE
    return DominanceResult(status, y, S1, S2, band, delta_stat)


def survival_table(s, points=SURVIVAL_GRID_POINTS):
    """(y, S(y)) at ``points`` quantiles of the sample itself."""
    y = pooled_grid(s, points=points)
    return y, empirical_survival(s, y)


def with_seed(cfg, seed):
    return replace(cfg, seed=int(seed))
