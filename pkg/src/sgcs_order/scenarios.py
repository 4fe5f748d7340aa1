"""Canned experiments pairing ordering-checker verdicts with Monte Carlo evidence.

Every claim names two systems and a relation between their C/I laws
(``"<="``, ``">="`` or ``"=="``).  The checker side must support the relation
and the simulation side must not contradict it; a disagreement fails the
claim.  Nothing is reconciled after the fact.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

from . import __version__
from .densities import (
    DiscreteMarks,
    DualSlopeLoss,
    LognormalMarks,
    PiecewiseConstant,
    PowerLawLoss,
    UnitMarks,
    constant,
    dimension_ratio_factor,
    dual_slope_factor,
    equivalent_1d,
    fading_transform,
    pathloss_exponent_factor,
    pathloss_transform,
    scale,
)
from .exceptions import ScenarioParameterError, UnknownScenarioError
from .montecarlo import (
    SimConfig,
    derive_seed,
    dominance_test,
    empirical_survival,
    ks_distance,
    pooled_grid,
    sample_ci,
)
from .ordering import (
    ProbeGrid,
    Status,
    check_beta_factor,
    check_monotone_diff,
    check_theorem1,
)

log = logging.getLogger(__name__)

# KS limits quoted for 1e5 samples per side; smaller runs widen them by the
# usual sqrt(n) scaling so a quick run is held to the same confidence.
KS_REFERENCE_N = 100_000
KS_LIMIT_SCALE = 0.01
KS_LIMIT_FADING = 0.015
DEFAULT_DELTA_STAT = 0.01


def ks_limit(base, n1, n2):
    factor = math.sqrt(0.5 * KS_REFERENCE_N * (1.0 / n1 + 1.0 / n2))
    return base * max(1.0, factor)


@dataclass(frozen=True)
class System:
    """One simulated configuration: a density, a path loss and a mark law."""

    label: str
    density: object
    eps: float = 4.0
    pathloss: object = None
    marks: object = field(default_factory=UnitMarks)
    mark_mode: str = "auto"

    def sim_config(self, base, seed):
        return replace(
            base,
            seed=seed,
            eps=float(self.eps),
            pathloss=self.pathloss,
            marks=self.marks,
            mark_mode=self.mark_mode,
        )

    def to_config(self):
        return {
            "density": self.density.to_config(),
            "eps": float(self.eps),
            "pathloss": None if self.pathloss is None else self.pathloss.to_config(),
            "marks": self.marks.to_config(),
            "mark_mode": self.mark_mode,
        }


@dataclass(frozen=True)
class Check:
    """A checker verdict together with what the claim needs from it.

    ``binding`` checks decide the claim; the others are recorded for context
    (for instance the reverse Theorem-1 check, whose failure is expected for a
    strict order but can go undetected on a finite grid).
    """

    name: str
    verdict: object
    expect_status: Status
    expect_relation: str | None = None
    binding: bool = True

    @property
    def ok(self):
        if self.verdict.status is not self.expect_status:
            return False
        return self.expect_relation is None or self.verdict.relation == self.expect_relation

    def to_dict(self):
        return {
            "name": self.name,
            "binding": self.binding,
            "expected_status": self.expect_status.value,
            "expected_relation": self.expect_relation,
            "ok": self.ok,
            "verdict": self.verdict.to_dict(),
        }


@dataclass
class Claim:
    statement: str
    first: str
    second: str
    relation: str
    checks: list
    mc: dict
    mc_agrees: bool

    @property
    def checker_agrees(self):
        return all(c.ok for c in self.checks if c.binding)

    @property
    def passed(self):
        return self.checker_agrees and self.mc_agrees

    def to_dict(self):
        return {
            "statement": self.statement,
            "first": self.first,
            "second": self.second,
            "relation": self.relation,
            "checker_agrees": self.checker_agrees,
            "monte_carlo_agrees": self.mc_agrees,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "monte_carlo": self.mc,
        }


@dataclass
class ScenarioReport:
    scenario: str
    parameters: dict
    simulation: dict
    grid: dict
    systems: dict
    claims: list
    survival: dict
    notes: list = field(default_factory=list)
    runtimes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.claims)

    def to_dict(self, include_runtimes=False):
        """JSON-ready dict. Runtimes are left out by default so reports stay byte-stable."""
        out = {
            "tool": "sgcs-order",
            "version": __version__,
            "scenario": self.scenario,
            "seed": self.simulation["seed"],
            "passed": self.passed,
            "parameters": self.parameters,
            "simulation": self.simulation,
            "grid": self.grid,
            "systems": self.systems,
            "claims": [c.to_dict() for c in self.claims],
            "notes": self.notes,
            "survival": self.survival,
        }
        if include_runtimes:
            out["runtimes_s"] = self.runtimes
        return out


# ---------------------------------------------------------------------------
# Runner plumbing
# ---------------------------------------------------------------------------


class _Run:
    """Collects simulated systems and claims for one scenario invocation."""

    def __init__(self, name, params, cfg, grid, workers, delta_stat):
        self.name = name
        self.params = params
        self.cfg = cfg
        self.grid = grid
        self.workers = workers
        self.delta_stat = delta_stat
        self.samples = {}
        self.systems = {}
        self.claims = []
        self.notes = []
        self.runtimes = {}

    def simulate(self, system):
        if system.label in self.samples:
            return self.samples[system.label]
        seed = derive_seed(self.cfg.seed, len(self.samples))
        start = time.perf_counter()
        s = sample_ci(system.density, system.sim_config(self.cfg, seed), workers=self.workers)
        self.runtimes[system.label] = round(time.perf_counter() - start, 3)
        log.info("%s/%s: %d samples in %.2fs", self.name, system.label, s.count, self.runtimes[system.label])
        self.samples[system.label] = s
        entry = system.to_config()
        entry.update(seed=seed, fingerprint=s.fingerprint, resampled=s.resampled, r_max=s.r_max)
        self.systems[system.label] = entry
        return s

    def order_claim(self, statement, sys1, sys2, relation, checks):
        s1, s2 = self.simulate(sys1), self.simulate(sys2)
        dom = dominance_test(s1, s2, self.delta_stat)
        mc = dom.to_dict()
        mc["ks"] = ks_distance(s1, s2)
        self.claims.append(
            Claim(statement, sys1.label, sys2.label, relation, checks, mc, not dom.contradicts(relation))
        )

    def equality_claim(self, statement, sys1, sys2, checks, ks_base):
        s1, s2 = self.simulate(sys1), self.simulate(sys2)
        ks = ks_distance(s1, s2)
        limit = ks_limit(ks_base, s1.count, s2.count)
        dom = dominance_test(s1, s2, self.delta_stat)
        mc = {"ks": ks, "ks_limit": limit, "dominance": dom.to_dict()}
        self.claims.append(Claim(statement, sys1.label, sys2.label, "==", checks, mc, ks < limit))

    def report(self):
        labels = list(self.samples)
        y = pooled_grid(*[self.samples[k] for k in labels])
        survival = {"y": y.tolist()}
        for k in labels:
            survival[k] = empirical_survival(self.samples[k], y).tolist()
        return ScenarioReport(
            scenario=self.name,
            parameters=self.params,
            simulation=self.cfg.to_config(),
            grid=self.grid.to_config(),
            systems=self.systems,
            claims=self.claims,
            survival=survival,
            notes=self.notes,
            runtimes=self.runtimes,
        )


def _order_checks(lam1, lam2, grid, relation):
    """Theorem-1 checks oriented for ``relation`` between systems 1 and 2."""
    if relation == "<=":
        lo, hi = lam1, lam2
    elif relation == ">=":
        lo, hi = lam2, lam1
    else:
        raise ValueError(relation)
    return [
        Check("theorem1", check_theorem1(lo, hi, grid), Status.HOLDS_ON_GRID, "<="),
        Check("theorem1_reverse", check_theorem1(hi, lo, grid), Status.VIOLATED, binding=False),
    ]


def _equal_checks(lam1, lam2, grid):
    return [
        Check("theorem1", check_theorem1(lam1, lam2, grid), Status.HOLDS_ON_GRID, "<="),
        Check("theorem1_reverse", check_theorem1(lam2, lam1, grid), Status.HOLDS_ON_GRID, "<="),
    ]


def _require(cond, message):
    if not cond:
        raise ScenarioParameterError(message)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _dimension_chain(run, p):
    lam0, eps = p["lam0"], p["eps"]
    _require(lam0 > 0, "lam0 must be positive")
    _require(eps > 3, "the 3-D system needs eps > l = 3 for finite interference")
    d = {l: equivalent_1d(l, lam0) for l in (1, 2, 3)}
    sys = {l: System(f"{l}d", d[l], eps=eps) for l in (1, 2, 3)}
    for lo, hi in ((2, 1), (3, 2)):
        checks = _order_checks(d[lo], d[hi], run.grid, "<=")
        # the density difference is monotone for 2-D vs 1-D only; for 3-D vs
        # 2-D it dips near the origin, so the check is informational there
        mono = check_monotone_diff(d[lo], d[hi], run.grid)
        if lo == 2:
            checks.append(Check("monotone_diff", mono, Status.HOLDS_ON_GRID, "<="))
        else:
            checks.append(Check("monotone_diff", mono, Status.VIOLATED, binding=False))
        # lambda_lo = beta * lambda_hi with beta non-decreasing: base >=st beta*base
        checks.append(
            Check(
                "beta_factor",
                check_beta_factor(d[hi], dimension_ratio_factor(hi, lo), run.grid),
                Status.HOLDS_ON_GRID,
                ">=",
            )
        )
        run.order_claim(f"C/I in {lo}-D <=st C/I in {hi}-D", sys[lo], sys[hi], "<=", checks)


def _highway(run, p):
    lam, alpha, beta, rho, eps = p["lam"], p["alpha"], p["beta"], p["rho"], p["eps"]
    _require(lam > 0 and beta > 0, "lam and beta must be positive so a serving BS exists")
    _require(alpha >= 0 and rho > 0, "alpha must be >= 0 and rho > 0")
    _require(eps > 1, "eps must exceed l = 1 for finite interference")
    d1 = constant(lam)
    d2 = PiecewiseConstant.two_level(alpha, beta, rho)
    s1 = System("uniform", d1, eps=eps)
    s2 = System("highway", d2, eps=eps)
    if alpha > beta:
        run.order_claim("uniform <=st highway (alpha > beta)", s1, s2, "<=", _order_checks(d1, d2, run.grid, "<="))
    elif alpha < beta:
        run.order_claim("uniform >=st highway (alpha < beta)", s1, s2, ">=", _order_checks(d1, d2, run.grid, ">="))
    else:
        run.equality_claim("uniform =st highway (alpha = beta)", s1, s2, _equal_checks(d1, d2, run.grid), KS_LIMIT_SCALE)


def _pathloss_exponent(run, p):
    l, lam0, e1, e2 = int(p["l"]), p["lam0"], p["eps1"], p["eps2"]
    _require(l in (1, 2, 3), "l must be 1, 2 or 3")
    _require(min(e1, e2) > l, "both exponents must exceed l")
    _require(e1 != e2, "the exponents must differ")
    d = equivalent_1d(l, lam0)
    t1, t2 = pathloss_transform(d, PowerLawLoss(e1)), pathloss_transform(d, PowerLawLoss(e2))
    rel = ">=" if e1 > e2 else "<="
    checks = _order_checks(t1, t2, run.grid, rel)
    # lambda_bar_2 = beta * lambda_bar_1
    checks.append(
        Check("beta_factor", check_beta_factor(t1, pathloss_exponent_factor(l, e1, e2), run.grid), Status.HOLDS_ON_GRID, rel)
    )
    run.order_claim(
        f"C/I with eps={e1:g} {rel}st C/I with eps={e2:g}",
        System(f"eps{e1:g}", d, eps=e1),
        System(f"eps{e2:g}", d, eps=e2),
        rel,
        checks,
    )


def _dual_slope(run, p):
    l, lam0, e1, e2 = int(p["l"]), p["lam0"], p["eps1"], p["eps2"]
    _require(l in (1, 2, 3), "l must be 1, 2 or 3")
    _require(min(e1, e2) > l, "both slopes must exceed l")
    _require(e1 != e2, "the slopes must differ")
    d = equivalent_1d(l, lam0)
    dual = DualSlopeLoss(e1, e2)
    t1, t2 = pathloss_transform(d, PowerLawLoss(e1)), pathloss_transform(d, dual)
    rel = "<=" if e2 > e1 else ">="
    if rel == ">=":
        run.notes.append("eps1 > eps2: the single-slope system is the better one")
    checks = _order_checks(t1, t2, run.grid, rel)
    checks.append(Check("beta_factor", check_beta_factor(t1, dual_slope_factor(l, e1, e2), run.grid), Status.HOLDS_ON_GRID, rel))
    run.order_claim(
        f"single slope {rel}st dual slope (eps1={e1:g}, eps2={e2:g})",
        System("single", d, eps=e1),
        System("dual", d, pathloss=dual),
        rel,
        checks,
    )


def _scaling_invariance(run, p):
    lam, a, eps = p["lam"], p["a"], p["eps"]
    _require(lam > 0 and a > 0, "lam and a must be positive")
    _require(eps > 1, "eps must exceed l = 1 for finite interference")
    d = constant(lam)
    ds = scale(d, a)
    run.equality_claim(
        f"C/I is unchanged by scaling with a={a:g}",
        System("base", d, eps=eps),
        System("scaled", ds, eps=eps),
        _equal_checks(d, ds, run.grid),
        KS_LIMIT_SCALE,
    )


def _density_invariance(run, p):
    l, lam1, lam2, eps = int(p["l"]), p["lam0_1"], p["lam0_2"], p["eps"]
    _require(l in (1, 2, 3), "l must be 1, 2 or 3")
    _require(lam1 > 0 and lam2 > 0, "densities must be positive")
    _require(eps > l, "eps must exceed l for finite interference")
    d1, d2 = equivalent_1d(l, lam1), equivalent_1d(l, lam2)
    run.equality_claim(
        f"C/I of a homogeneous {l}-D system does not depend on the density",
        System(f"lam0={lam1:g}", d1, eps=eps),
        System(f"lam0={lam2:g}", d2, eps=eps),
        _equal_checks(d1, d2, run.grid),
        KS_LIMIT_SCALE,
    )


def _fading_invariance(run, p):
    l, lam0, eps = int(p["l"]), p["lam0"], p["eps"]
    _require(l in (1, 2, 3), "l must be 1, 2 or 3")
    _require(eps > l, "eps must exceed l for finite interference")
    _require(p["sigma_db"] > 0, "sigma_db must be positive")
    marks = LognormalMarks.from_db(p["sigma_db"], p["mean_db"])
    d = equivalent_1d(l, lam0)
    faded = fading_transform(d, marks, eps)
    run.notes.append(f"E[W^(l/eps)] = {marks.moment(l / eps)!r}")
    run.equality_claim(
        "C/I of a homogeneous system does not depend on the mark law",
        System("lognormal", d, eps=eps, marks=marks, mark_mode="raw"),
        System("unit", d, eps=eps),
        _equal_checks(faded, d, run.grid),
        KS_LIMIT_FADING,
    )


def _fading_equivalence(run, p):
    eps = p["eps"]
    _require(eps > 1, "eps must exceed l = 1 for finite interference")
    values = (p["w1"], p["w2"])
    _require(min(values) > 0, "mark values must be positive")
    _require(0 < p["p1"] < 1, "p1 must lie in (0, 1)")
    _require(p["beta"] > 0 and p["alpha"] >= 0 and p["rho"] > 0, "highway levels invalid")
    marks = DiscreteMarks(values, (p["p1"], 1.0 - p["p1"]))
    base = PiecewiseConstant.two_level(p["alpha"], p["beta"], p["rho"])
    faded = fading_transform(base, marks, eps)
    # the analytic side of this claim is the transform itself: the faded
    # density must sit in no strict order with itself and be a valid density
    run.notes.append("checker side: reflexive Theorem-1 check on the transformed density")
    run.equality_claim(
        "marked system =st its fading-transformed unit-mark system",
        System("raw_marks", base, eps=eps, marks=marks, mark_mode="raw"),
        System("transformed", faded, eps=eps),
        _equal_checks(faded, faded, run.grid),
        KS_LIMIT_FADING,
    )


@dataclass(frozen=True)
class ScenarioSpec:
    runner: object
    defaults: dict
    summary: str


SCENARIOS = {
    "dimension_chain": ScenarioSpec(
        _dimension_chain, {"lam0": 1.0, "eps": 4.0}, "1-D >=st 2-D >=st 3-D homogeneous systems"
    ),
    "highway": ScenarioSpec(
        _highway,
        {"lam": 3.0, "alpha": 2.0, "beta": 1.0, "rho": 1.0, "eps": 4.0},
        "uniform density vs a two-level highway density",
    ),
    "pathloss_exponent": ScenarioSpec(
        _pathloss_exponent,
        {"l": 2, "lam0": 1.0, "eps1": 4.0, "eps2": 3.0},
        "a larger path-loss exponent gives a better C/I",
    ),
    "dual_slope": ScenarioSpec(
        _dual_slope,
        {"l": 2, "lam0": 1.0, "eps1": 3.0, "eps2": 4.0},
        "single-slope vs dual-slope path loss with a knee at r = 1",
    ),
    "scaling_invariance": ScenarioSpec(
        _scaling_invariance, {"lam": 1.0, "a": 3.0, "eps": 2.0}, "C/I is invariant within a scale family"
    ),
    "density_invariance": ScenarioSpec(
        _density_invariance,
        {"l": 2, "lam0_1": 1.0, "lam0_2": 4.0, "eps": 4.0},
        "homogeneous C/I does not depend on the BS density",
    ),
    "fading_invariance": ScenarioSpec(
        _fading_invariance,
        {"l": 2, "lam0": 1.0, "eps": 4.0, "sigma_db": 8.0, "mean_db": 0.0},
        "homogeneous C/I does not depend on shadowing",
    ),
    "fading_equivalence": ScenarioSpec(
        _fading_equivalence,
        {"alpha": 2.0, "beta": 1.0, "rho": 1.0, "eps": 4.0, "w1": 1.0, "w2": 4.0, "p1": 0.5},
        "raw marks vs the fading-transformed density",
    ),
}


def list_scenarios():
    return {k: v.summary for k, v in SCENARIOS.items()}


def resolve_params(name, params=None):
    """Defaults of scenario ``name`` overridden by ``params``, all coerced to numbers."""
    if name not in SCENARIOS:
        raise UnknownScenarioError(name)
    defaults = SCENARIOS[name].defaults
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in defaults:
            raise ScenarioParameterError(
                f"unknown parameter {key!r} for scenario {name!r}; expected one of {sorted(defaults)}"
            )
        try:
            merged[key] = type(defaults[key])(value)
        except (TypeError, ValueError) as exc:
            raise ScenarioParameterError(f"parameter {key!r}: {exc}") from None
        if isinstance(merged[key], float) and not math.isfinite(merged[key]):
            raise ScenarioParameterError(f"parameter {key!r} must be finite")
    return merged


def run_scenario(name, params=None, cfg=None, *, grid=None, workers=1, delta_stat=DEFAULT_DELTA_STAT):
    """Run scenario ``name`` and return its :class:`ScenarioReport`.

    ``cfg`` supplies sample count, master seed, chunking and truncation; the
    scenario sets the exponent, path loss and marks of each system.

    Raises:
        UnknownScenarioError: for an unregistered name.
        ScenarioParameterError: for unknown or out-of-range parameters.
    """
    p = resolve_params(name, params)
    cfg = cfg or SimConfig()
    run = _Run(name, p, cfg, grid or ProbeGrid(), workers, delta_stat)
    SCENARIOS[name].runner(run, p)
    return run.report()


__all__ = [
    "SCENARIOS",
    "Check",
    "Claim",
    "ScenarioReport",
    "System",
    "ks_limit",
    "list_scenarios",
    "resolve_params",
    "run_scenario",
]
