"""Stochastic ordering of C/I in shotgun cellular systems.

Densities of BS distances (:mod:`.densities`), finite-grid checkers for the
sufficient ordering conditions (:mod:`.ordering`), a seeded Monte Carlo
engine with dominance tests (:mod:`.montecarlo`) and canned experiments
(:mod:`.scenarios`).
"""

__version__ = "0.1.0"

from .densities import (  # noqa: E402
    B_L,
    DiscreteMarks,
    DualSlopeLoss,
    LognormalMarks,
    PiecewiseConstant,
    PowerLaw,
    PowerLawLoss,
    UnitMarks,
    constant,
    cumulative,
    equivalent_1d,
    eval_density,
    fading_transform,
    inverse_cumulative,
    mark_moment,
    pathloss_transform,
    scale,
)
from .montecarlo import (  # noqa: E402
    SimConfig,
    dominance_test,
    empirical_survival,
    ks_distance,
    sample_ci,
    sample_ppp,
    truncation_radius,
)
from .ordering import (  # noqa: E402
    ProbeGrid,
    check_beta_factor,
    check_monotone_diff,
    check_theorem1,
)
from .scenarios import run_scenario  # noqa: E402

__all__ = [
    "B_L",
    "DiscreteMarks",
    "DualSlopeLoss",
    "LognormalMarks",
    "PiecewiseConstant",
    "PowerLaw",
    "PowerLawLoss",
    "ProbeGrid",
    "SimConfig",
    "UnitMarks",
    "check_beta_factor",
    "check_monotone_diff",
    "check_theorem1",
    "constant",
    "cumulative",
    "dominance_test",
    "empirical_survival",
    "equivalent_1d",
    "eval_density",
    "fading_transform",
    "inverse_cumulative",
    "ks_distance",
    "mark_moment",
    "pathloss_transform",
    "run_scenario",
    "sample_ci",
    "sample_ppp",
    "scale",
    "truncation_radius",
]
