"""BS density functions on the half-line and the transforms acting on them.

A :class:`Density` is the intensity ``lambda(r)`` of the 1-D Poisson process of
base-station distances seen from a mobile at the origin.  Every density
exposes three vectorised views:

* ``intensity(r)``          -- lambda(r)
* ``cumulative(r)``         -- mu(r), the integral of lambda over [0, r]
* ``inverse_cumulative(q)`` -- sup{r : mu(r) <= q}

The families form a small closed algebra (power law, piecewise constant,
scaled, product, path-loss transformed, faded) so that closed forms for mu and
its inverse propagate through scaling and change of variables.  Families
without a closed form fall back on adaptive quadrature and bracketed root
finding from :mod:`sgcs_order._numerics`.

All objects are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from ._numerics import (
    QUAD_ABS_TOL,
    integrate_interval,
    invert_monotone,
    mass_is_unbounded,
)
from .exceptions import DivergenceError, FiniteMassError

# Surface-area constants of the unit ball boundary in 1, 2 and 3 dimensions.
B_L = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _out(values, like):
    values = np.asarray(values, dtype=float)
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# Mark distributions (product W = shadow fading x transmit power)
# ---------------------------------------------------------------------------


class MarkDistribution:
    """Law of the per-BS multiplicative mark ``W``."""

    kind = "abstract"

    def moment(self, s):
        """Return ``E[W**s]``; ``math.inf`` when the moment does not exist."""
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def expect(self, g):
        """Return ``E[g(W)]`` for a vector-valued ``g`` of a scalar mark.

        Raises:
            DivergenceError: if the expectation cannot be shown to converge.
        """
        raise NotImplementedError

    @property
    def is_unit(self):
        return False

    def to_config(self):
        raise NotImplementedError


def _quad_vec_expect(integrand, a, b):
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            res, err, info = integrate.quad_vec(
                integrand, a, b, epsabs=QUAD_ABS_TOL, epsrel=1e-10, full_output=True, limit=10_000
            )
    except (ValueError, OverflowError, FloatingPointError) as exc:
        raise DivergenceError(f"mark expectation does not converge ({exc})") from exc
    res = np.asarray(res, dtype=float)
    if not info.success or not np.all(np.isfinite(res)) or err > 1e-6 * max(1.0, float(np.max(np.abs(res)))):
        raise DivergenceError("mark expectation does not converge")
    return res


@dataclass(frozen=True)
class UnitMarks(MarkDistribution):
    kind = "unit"

    def moment(self, s):
        return 1.0

    def sample(self, rng, size):
        return np.ones(size)

    def quantile(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def expect(self, g):
        return np.asarray(g(1.0), dtype=float)

    @property
    def is_unit(self):
        return True

    def to_config(self):
        return {"kind": "unit"}


@dataclass(frozen=True)
class LognormalMarks(MarkDistribution):
    """``ln W ~ Normal(location, scale**2)`` with parameters in natural-log units."""

    location: float = 0.0
    scale: float = 1.0
    kind = "lognormal"

    def __post_init__(self):
        if not math.isfinite(self.location):
            raise ValueError("location must be finite")
        _check_positive("scale", self.scale)

    @classmethod
    def from_db(cls, sigma_db, mean_db=0.0):
        """Shadowing specified as a dB-domain Gaussian."""
        c = math.log(10.0) / 10.0
        return cls(location=mean_db * c, scale=sigma_db * c)

    def moment(self, s):
        return math.exp(s * self.location + 0.5 * (s * self.scale) ** 2)

    def sample(self, rng, size):
        return rng.lognormal(self.location, self.scale, size)

    def quantile(self, u):
        return np.exp(self.location + self.scale * special.ndtri(u))

    def expect(self, g):
        def integrand(z):
            return np.asarray(g(math.exp(self.location + self.scale * z)), dtype=float) * (
                math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
            )

        # normal mass beyond |z| = 38 is below 1e-300
        return _quad_vec_expect(integrand, -38.0, 38.0)

    def to_config(self):
        return {"kind": "lognormal", "location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class DiscreteMarks(MarkDistribution):
    """Finitely many positive mark values with given probabilities."""

    values: tuple
    probs: tuple
    kind = "discrete"

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        p = tuple(float(x) for x in self.probs)
        if len(v) == 0 or len(v) != len(p):
            raise ValueError("values and probs must be non-empty and of equal length")
        if any(not (math.isfinite(x) and x > 0) for x in v):
            raise ValueError("mark values must be positive and finite")
        if any(x < 0 for x in p) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    def moment(self, s):
        return math.fsum(p * w**s for w, p in zip(self.values, self.probs))

    def sample(self, rng, size):
        return rng.choice(np.array(self.values), size=size, p=np.array(self.probs))

    def quantile(self, u):
        order = np.argsort(self.values)
        v = np.array(self.values)[order]
        cdf = np.cumsum(np.array(self.probs)[order])
        idx = np.searchsorted(cdf, np.asarray(u, dtype=float), side="left")
        return v[np.minimum(idx, v.size - 1)]

    def expect(self, g):
        return sum(p * np.asarray(g(w), dtype=float) for w, p in zip(self.values, self.probs))

    def to_config(self):
        return {"kind": "discrete", "values": list(self.values), "probs": list(self.probs)}


@dataclass(frozen=True)
class ParetoMarks(MarkDistribution):
    """Heavy-tailed marks, ``P(W > w) = (scale / w)**shape`` for ``w >= scale``."""

    shape: float
    scale: float = 1.0
    kind = "pareto"

    def __post_init__(self):
        _check_positive("shape", self.shape)
        _check_positive("scale", self.scale)

    def moment(self, s):
        if s >= self.shape:
            return math.inf
        return self.shape * self.scale**s / (self.shape - s)

    def sample(self, rng, size):
        return self.scale * (1.0 - rng.random(size)) ** (-1.0 / self.shape)

    def quantile(self, u):
        return self.scale * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.shape)

    def expect(self, g):
        a, xm = self.shape, self.scale

        def integrand(w):
            return np.asarray(g(w), dtype=float) * (a * xm**a * w ** (-a - 1.0))

        return _quad_vec_expect(integrand, xm, np.inf)

    def to_config(self):
        return {"kind": "pareto", "shape": self.shape, "scale": self.scale}


def combine_marks(shadowing, power):
    """Collapse independent shadowing and transmit-power laws into ``W = Psi K``.

    Only pairs whose product stays inside the supported families are accepted.
    """
    if shadowing.is_unit:
        return power
    if power.is_unit:
        return shadowing
    if isinstance(shadowing, LognormalMarks) and isinstance(power, LognormalMarks):
        return LognormalMarks(
            shadowing.location + power.location, math.hypot(shadowing.scale, power.scale)
        )
    if isinstance(shadowing, DiscreteMarks) and isinstance(power, DiscreteMarks):
        table = {}
        for v1, p1 in zip(shadowing.values, shadowing.probs):
            for v2, p2 in zip(power.values, power.probs):
                table[v1 * v2] = table.get(v1 * v2, 0.0) + p1 * p2
        values = sorted(table)
        probs = [table[v] for v in values]
        probs[-1] = 1.0 - math.fsum(probs[:-1])
        return DiscreteMarks(tuple(values), tuple(probs))
    raise ValueError(
        f"product of {shadowing.kind} and {power.kind} marks is not a supported family; "
        "describe W = Psi*K directly"
    )


def mark_moment(marks, s):
    """``E[W**s]``; returns ``math.inf`` to flag a divergent moment."""
    return marks.moment(s)


# ---------------------------------------------------------------------------
# Path-loss laws
# ---------------------------------------------------------------------------


class PathLossModel:
    """Monotone attenuation ``h``; received power at distance r is ``1/h(r)``."""

    kind = "abstract"

    def h(self, r):
        raise NotImplementedError

    def inverse(self, s):
        raise NotImplementedError

    def derivative(self, r):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLawLoss(PathLossModel):
    eps: float
    kind = "power_law"

    def __post_init__(self):
        _check_positive("eps", self.eps)

    def h(self, r):
        return _out(np.asarray(r, dtype=float) ** self.eps, r)

    def inverse(self, s):
        return _out(np.asarray(s, dtype=float) ** (1.0 / self.eps), s)

    def derivative(self, r):
        return _out(self.eps * np.asarray(r, dtype=float) ** (self.eps - 1.0), r)

    def to_config(self):
        return {"kind": "power_law", "eps": self.eps}


@dataclass(frozen=True)
class DualSlopeLoss(PathLossModel):
    """``h(r) = r**eps1`` up to the knee, continued as ``c * r**eps2`` beyond."""

    eps1: float
    eps2: float
    knee: float = 1.0
    kind = "dual_slope"

    def __post_init__(self):
        _check_positive("eps1", self.eps1)
        _check_positive("eps2", self.eps2)
        _check_positive("knee", self.knee)

    @property
    def _c2(self):
        return self.knee ** (self.eps1 - self.eps2)

    def h(self, r):
        x = np.asarray(r, dtype=float)
        near = x <= self.knee
        with np.errstate(divide="ignore"):
            val = np.where(near, x**self.eps1, self._c2 * x**self.eps2)
        return _out(val, r)

    def inverse(self, s):
        y = np.asarray(s, dtype=float)
        near = y <= self.knee**self.eps1
        val = np.where(near, y ** (1.0 / self.eps1), (y / self._c2) ** (1.0 / self.eps2))
        return _out(val, s)

    def derivative(self, r):
        # one-sided (inner) slope at the knee itself
        x = np.asarray(r, dtype=float)
        near = x <= self.knee
        with np.errstate(divide="ignore"):
            val = np.where(
                near,
                self.eps1 * x ** (self.eps1 - 1.0),
                self._c2 * self.eps2 * x ** (self.eps2 - 1.0),
            )
        return _out(val, r)

    def to_config(self):
        return {"kind": "dual_slope", "eps1": self.eps1, "eps2": self.eps2, "knee": self.knee}


def as_pathloss(loss):
    """Accept either a :class:`PathLossModel` or a bare power-law exponent."""
    if isinstance(loss, PathLossModel):
        return loss
    return PowerLawLoss(float(loss))


# ---------------------------------------------------------------------------
# Density algebra
# ---------------------------------------------------------------------------


class Density:
    """Base class: lambda(r), mu(r) and the generalised inverse of mu."""

    family = "abstract"
    #: True when mu and its inverse are available without quadrature.
    closed_form = False

    def intensity(self, r):
        raise NotImplementedError

    def cumulative(self, r):
        raise NotImplementedError

    def inverse_cumulative(self, q):
        return _out(invert_monotone(self.cumulative, q), q)

    def __call__(self, r):
        return self.intensity(r)

    def discontinuities(self):
        """Locations of discontinuities of lambda (used as quadrature hints)."""
        return ()

    def to_config(self):
        raise NotImplementedError

    def _require_unbounded(self):
        if not mass_is_unbounded(self.cumulative):
            raise FiniteMassError(
                f"{self.family} density has finite total mass; a serving BS would not exist a.s."
            )


@dataclass(frozen=True)
class PowerLaw(Density):
    """``lambda(r) = coef * r**exponent`` with ``exponent > -1``.

    A homogeneous l-D system of density lam0 maps to
    ``PowerLaw(lam0 * B_L[l], l - 1)`` (see :meth:`homogeneous`).
    """

    coef: float
    exponent: float = 0.0
    family = "power_law"
    closed_form = True

    def __post_init__(self):
        _check_positive("coef", self.coef)
        if not (math.isfinite(self.exponent) and self.exponent > -1.0):
            raise ValueError("exponent must be > -1 so that mu(r) is finite")

    @classmethod
    def homogeneous(cls, lam0, dim):
        if dim not in B_L:
            raise ValueError(f"dimension must be one of 1, 2, 3; got {dim!r}")
        lam0 = _check_positive("lam0", lam0)
        return cls(lam0 * B_L[dim], float(dim - 1))

    @property
    def order(self):
        """Growth order ``exponent + 1`` of mu (the dimension l for homogeneous systems)."""
        return self.exponent + 1.0

    def intensity(self, r):
        x = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return _out(self.coef * x**self.exponent, r)

    def cumulative(self, r):
        k = self.order
        return _out(self.coef * np.asarray(r, dtype=float) ** k / k, r)

    def inverse_cumulative(self, q):
        k = self.order
        return _out((k * np.asarray(q, dtype=float) / self.coef) ** (1.0 / k), q)

    def to_config(self):
        return {"family": "power_law", "coef": self.coef, "exponent": self.exponent}


def constant(lam):
    """Homogeneous 1-D intensity ``lambda(r) = lam`` on the half-line."""
    return PowerLaw(_check_positive("lam", lam), 0.0)


@dataclass(frozen=True)
class PiecewiseConstant(Density):
    """Level ``levels[i]`` on ``(b[i-1], b[i]]`` with ``b[-1] = 0``; last level extends to infinity."""

    breakpoints: tuple
    levels: tuple
    family = "piecewise_constant"
    closed_form = True

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        lv = tuple(float(x) for x in self.levels)
        if len(lv) != len(b) + 1:
            raise ValueError("need exactly one more level than breakpoints")
        if any(not (math.isfinite(x) and x > 0) for x in b) or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("breakpoints must be positive, finite and strictly increasing")
        if any(not (math.isfinite(x) and x >= 0) for x in lv):
            raise ValueError("levels must be finite and non-negative")
        if lv[-1] <= 0:
            raise FiniteMassError("last level must be positive so that mu(r) is unbounded")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "levels", lv)
        knots = np.concatenate(([0.0], b))
        mass = np.concatenate(([0.0], np.cumsum(np.diff(knots) * np.array(lv[:-1]))))
        object.__setattr__(self, "_knots", knots)
        object.__setattr__(self, "_mass", mass)

    @classmethod
    def two_level(cls, alpha, beta, rho):
        """``alpha`` on [0, rho], ``beta`` beyond."""
        return cls((rho,), (alpha, beta))

    def discontinuities(self):
        return self.breakpoints

    def intensity(self, r):
        x = np.asarray(r, dtype=float)
        idx = np.searchsorted(np.array(self.breakpoints), x, side="left")
        return _out(np.array(self.levels)[idx], r)

    def cumulative(self, r):
        x = np.asarray(r, dtype=float)
        seg = np.searchsorted(self._knots, x, side="right") - 1
        seg = np.clip(seg, 0, len(self.levels) - 1)
        val = self._mass[seg] + np.array(self.levels)[seg] * (x - self._knots[seg])
        return _out(val, r)

    def inverse_cumulative(self, q):
        y = np.asarray(q, dtype=float)
        # last knot whose mass does not exceed q; flat segments are skipped past
        seg = np.searchsorted(self._mass, y, side="right") - 1
        seg = np.clip(seg, 0, len(self.levels) - 1)
        lv = np.array(self.levels)[seg]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self._knots[seg] + (y - self._mass[seg]) / lv
        return _out(val, q)

    def to_config(self):
        return {
            "family": "piecewise_constant",
            "breakpoints": list(self.breakpoints),
            "levels": list(self.levels),
        }


@dataclass(frozen=True)
class Scaled(Density):
    """``(1/a) * base(r / a)``: the same process with every distance stretched by ``a``."""

    base: Density
    a: float
    family = "scaled"

    def __post_init__(self):
        object.__setattr__(self, "a", _check_positive("a", self.a))

    @property
    def closed_form(self):
        return self.base.closed_form

    def discontinuities(self):
        return tuple(self.a * b for b in self.base.discontinuities())

    def intensity(self, r):
        return _out(np.asarray(self.base.intensity(np.asarray(r, dtype=float) / self.a)) / self.a, r)

    def cumulative(self, r):
        return _out(self.base.cumulative(np.asarray(r, dtype=float) / self.a), r)

    def inverse_cumulative(self, q):
        return _out(self.a * np.asarray(self.base.inverse_cumulative(np.asarray(q, dtype=float))), q)

    def to_config(self):
        return {"family": "scaled", "base": self.base.to_config(), "a": self.a}


# -- positive factor functions used by Product --------------------------------


@dataclass(frozen=True)
class PiecewisePowerFactor:
    """``beta(r) = coefs[i] * r**exponents[i]`` on the i-th right-closed segment."""

    breakpoints: tuple
    coefs: tuple
    exponents: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        c = tuple(float(x) for x in self.coefs)
        e = tuple(float(x) for x in self.exponents)
        if not (len(c) == len(e) == len(b) + 1):
            raise ValueError("need one more segment than breakpoints")
        if any(x <= 0 for x in c):
            raise ValueError("factor coefficients must be positive")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "coefs", c)
        object.__setattr__(self, "exponents", e)

    def __call__(self, r):
        x = np.asarray(r, dtype=float)
        idx = np.searchsorted(np.array(self.breakpoints), x, side="left")
        with np.errstate(divide="ignore"):
            val = np.array(self.coefs)[idx] * x ** np.array(self.exponents)[idx]
        return _out(val, r)

    def discontinuities(self):
        return self.breakpoints

    def to_config(self):
        return {
            "kind": "piecewise_power",
            "breakpoints": list(self.breakpoints),
            "coefs": list(self.coefs),
            "exponents": list(self.exponents),
        }


@dataclass(frozen=True)
class TabulatedFactor:
    """Piecewise-linear interpolation of tabulated positive values, flat outside the table."""

    r: tuple
    values: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in self.r)
        v = tuple(float(x) for x in self.values)
        if len(r) < 2 or len(r) != len(v) or any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("table needs >= 2 strictly increasing abscissae")
        if any(x <= 0 for x in v):
            raise ValueError("tabulated factor must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)

    def __call__(self, r):
        return _out(np.interp(np.asarray(r, dtype=float), self.r, self.values), r)

    def discontinuities(self):
        return self.r

    def to_config(self):
        return {"kind": "tabulated", "r": list(self.r), "values": list(self.values)}


def dimension_ratio_factor(l_from, l_to):
    """``beta(r) = (b_to / b_from) * r**(l_to - l_from)`` relating two homogeneous dimensions."""
    return PiecewisePowerFactor((), (B_L[l_to] / B_L[l_from],), (float(l_to - l_from),))


def pathloss_exponent_factor(dim, eps1, eps2):
    """``beta`` with ``lambda_bar_eps2 = beta * lambda_bar_eps1`` for two power-law losses."""
    return PiecewisePowerFactor((), (eps1 / eps2,), (dim / eps2 - dim / eps1,))


def dual_slope_factor(dim, eps1, eps2):
    """``beta`` with ``lambda_bar_dual = beta * lambda_bar_single`` (knee at r = 1).

    Equal to 1 up to the knee and ``(eps1/eps2) r**(l/eps2 - l/eps1)`` beyond.
    """
    return PiecewisePowerFactor((1.0,), (1.0, eps1 / eps2), (0.0, dim / eps2 - dim / eps1))


@dataclass(frozen=True)
class Product(Density):
    """``beta(r) * base(r)`` for a positive factor ``beta``; mu by adaptive quadrature."""

    base: Density
    factor: Callable = field(compare=False)
    label: str = ""
    family = "product"

    def __post_init__(self):
        probe = np.geomspace(1e-6, 1e6, 241)
        vals = np.asarray(self.factor(probe), dtype=float)
        if not np.all(np.isfinite(vals) & (vals > 0)):
            raise ValueError("product factor must be positive and finite")
        self._require_unbounded()

    def discontinuities(self):
        own = getattr(self.factor, "discontinuities", lambda: ())()
        return tuple(sorted(set(self.base.discontinuities()) | set(own)))

    def intensity(self, r):
        x = np.asarray(r, dtype=float)
        return _out(np.asarray(self.factor(x)) * np.asarray(self.base.intensity(x)), r)

    def _integrand(self, s):
        return float(self.factor(s)) * float(self.base.intensity(s))

    def cumulative(self, r):
        x = np.asarray(r, dtype=float)
        flat = x.ravel()
        if np.any(flat < 0):
            raise ValueError("distance must be non-negative")
        order = np.argsort(flat)
        pts = self.discontinuities()
        acc, prev = 0.0, 0.0
        res = np.empty(flat.size)
        for i in order:
            acc += integrate_interval(self._integrand, prev, flat[i], points=pts)
            prev = max(prev, flat[i])
            res[i] = acc
        return _out(res.reshape(x.shape), r)

    def to_config(self):
        if not hasattr(self.factor, "to_config"):
            raise TypeError("product factor has no textual representation")
        return {"family": "product", "base": self.base.to_config(), "factor": self.factor.to_config()}


@dataclass(frozen=True)
class PathlossTransformed(Density):
    """Equivalent unit-exponent system for path loss ``h``.

    lambda_bar(s) = lambda(h^-1(s)) / h'(h^-1(s)).  Because ``h`` maps BS
    distances to BS "distances" one-to-one, mu_bar(s) = mu(h^-1(s)) and the
    inverse is ``h(mu^-1(q))`` in closed form whenever the base has one.
    """

    base: Density
    loss: PathLossModel
    family = "pathloss_transformed"

    def __post_init__(self):
        self._require_unbounded()

    @property
    def closed_form(self):
        return self.base.closed_form

    def discontinuities(self):
        pts = set(np.atleast_1d(self.loss.h(np.array(self.base.discontinuities(), dtype=float))).tolist())
        if isinstance(self.loss, DualSlopeLoss):
            pts.add(float(self.loss.h(self.loss.knee)))
        return tuple(sorted(pts))

    def intensity(self, s):
        x = np.asarray(self.loss.inverse(np.asarray(s, dtype=float)))
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.asarray(self.base.intensity(x)) / np.asarray(self.loss.derivative(x))
        return _out(val, s)

    def cumulative(self, s):
        return _out(self.base.cumulative(self.loss.inverse(np.asarray(s, dtype=float))), s)

    def inverse_cumulative(self, q):
        return _out(self.loss.h(self.base.inverse_cumulative(np.asarray(q, dtype=float))), q)

    def to_config(self):
        return {
            "family": "pathloss_transformed",
            "base": self.base.to_config(),
            "pathloss": self.loss.to_config(),
        }


@dataclass(frozen=True)
class Faded(Density):
    """Unit-mark system equivalent to ``base`` with i.i.d. marks ``W``.

    Effective distances ``R * W**(-1/eps)`` form a Poisson process with
    lambda_bar(r) = E[W^(1/eps) lambda(r W^(1/eps))] and
    mu_bar(r) = E[mu(r W^(1/eps))].  Discrete marks give exact atom sums;
    continuous marks use vector adaptive quadrature.
    """

    base: Density
    marks: MarkDistribution
    eps: float
    family = "faded"

    def __post_init__(self):
        _check_positive("eps", self.eps)
        # raises DivergenceError when E[mu(r W^(1/eps))] is infinite
        self.cumulative(np.array([1.0]))

    def _expect(self, fn, r):
        x = np.asarray(r, dtype=float)
        flat = x.ravel()
        inv = 1.0 / self.eps
        val = self.marks.expect(lambda w: fn(flat, w**inv))
        return _out(np.asarray(val).reshape(x.shape), r)

    def intensity(self, r):
        return self._expect(lambda x, s: s * np.asarray(self.base.intensity(x * s)), r)

    def cumulative(self, r):
        return self._expect(lambda x, s: np.asarray(self.base.cumulative(x * s)), r)

    def to_config(self):
        return {
            "family": "faded",
            "base": self.base.to_config(),
            "marks": self.marks.to_config(),
            "eps": self.eps,
        }


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def eval_density(d, r):
    """lambda(r) of ``d``."""
    return d.intensity(r)


def cumulative(d, r):
    """mu(r) = integral of lambda over [0, r]."""
    return d.cumulative(r)


def inverse_cumulative(d, q):
    """sup{r : mu(r) <= q}."""
    return d.inverse_cumulative(q)


def equivalent_1d(dim, lam0):
    """Equivalent 1-D density of a homogeneous ``dim``-dimensional system."""
    return PowerLaw.homogeneous(lam0, dim)


def scale(d, a):
    """Member ``(1/a) d(r/a)`` of the scale family of ``d`` (same C/I law)."""
    return Scaled(d, a)


def pathloss_transform(d, loss):
    """Equivalent density under path loss ``1/h`` for a system with exponent 1."""
    loss = as_pathloss(loss)
    if isinstance(loss, PowerLawLoss):
        if loss.eps == 1.0:
            return d
        if isinstance(d, PowerLaw):
            k = d.order
            return PowerLaw(d.coef / loss.eps, k / loss.eps - 1.0)
    return PathlossTransformed(d, loss)


def fading_transform(d, marks, eps):
    """Unit-mark density equivalent to ``d`` with i.i.d. marks ``W = Psi K``.

    Raises:
        DivergenceError: when the defining expectation diverges.
    """
    eps = _check_positive("eps", eps)
    if marks.is_unit:
        return d
    if isinstance(d, PowerLaw):
        m = marks.moment(d.order / eps)
        if not math.isfinite(m):
            raise DivergenceError(
                f"E[W^{d.order / eps:g}] diverges; fading transform undefined for this mark law"
            )
        return PowerLaw(d.coef * m, d.exponent)
    return Faded(d, marks, eps)


def sup_intensity(d, window):
    """Upper bound for lambda on [0, window] (used by the thinning sampler)."""
    if isinstance(d, PowerLaw):
        if d.exponent < 0:
            raise ValueError("intensity is unbounded near the origin")
        return float(d.intensity(window)) if d.exponent > 0 else d.coef
    if isinstance(d, PiecewiseConstant):
        return max(d.levels)
    if isinstance(d, Scaled):
        return sup_intensity(d.base, window / d.a) / d.a
    grid = np.linspace(0.0, window, 8193)[1:]
    vals = np.asarray(d.intensity(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("intensity is unbounded on the window")
    return 1.1 * float(vals.max())

