# %% [markdown]
# # Monte Carlo checks of the ordering results
#
# The sampler draws BS distances by time change of a unit-rate Poisson
# process, evaluates C/I for the nearest BS, and adds a binned far field.
# Here we compare survival curves of C/I for pairs of systems.

# %%
import numpy as np

from sgcs_order import densities as dn
from sgcs_order.montecarlo import SimConfig, dominance_test, ks_distance, sample_ci, thinning_ci_oracle
from sgcs_order.scenarios import run_scenario

N = 40_000

# %% [markdown]
# ## Sampler against a brute-force oracle
#
# The thinning oracle never touches mu or its inverse, so agreement with it
# checks the whole time-change path.

# %%
hw = dn.PiecewiseConstant.two_level(2.0, 1.0, 1.0)
fast = sample_ci(hw, SimConfig(n_samples=N, seed=1, eps=3.0))
slow = thinning_ci_oracle(hw, 3.0, N, 2, 200.0)
print(f"KS(time change, thinning) = {ks_distance(fast, slow):.4f}")

# %% [markdown]
# ## Invariances
#
# Scaling a density, changing a homogeneous intensity, or adding i.i.d.
# lognormal marks to a homogeneous system leaves the C/I law unchanged.

# %%
for name in ("scaling_invariance", "density_invariance", "fading_invariance"):
    rep = run_scenario(name, cfg=SimConfig(n_samples=N, seed=3))
    mc = rep.claims[0].mc
    print(f"{name:20s} KS={mc['ks']:.4f} limit={mc['ks_limit']:.4f} passed={rep.passed}")

# %% [markdown]
# ## Orders
#
# For strict orders we look at the largest amount by which one survival curve
# sits above the other, against the summed DKW band.

# %%
d1, d2 = dn.equivalent_1d(1, 1.0), dn.equivalent_1d(2, 1.0)
s1 = sample_ci(d1, SimConfig(n_samples=N, seed=4, eps=4.0))
s2 = sample_ci(d2, SimConfig(n_samples=N, seed=5, eps=4.0))
dom = dominance_test(s2, s1)
print(dom.status.value, f"band={dom.band:.4f}",
      f"max S2-S1={dom.excess_1_over_2:.4f}", f"max S1-S2={dom.excess_2_over_1:.4f}")

# %%
for name in ("dimension_chain", "highway", "pathloss_exponent", "dual_slope"):
    rep = run_scenario(name, cfg=SimConfig(n_samples=N, seed=6))
    for claim in rep.claims:
        print(f"{name:18s} {claim.statement:45s} passed={claim.passed}")

# %% [markdown]
# ## Survival curve at a few thresholds (dB)

# %%
thresholds_db = np.array([-5.0, 0.0, 5.0, 10.0, 20.0])
y = 10 ** (thresholds_db / 10)
for label, s in (("1-D", s1), ("2-D", s2)):
    surv = [(s.values > t).mean() for t in y]
    print(label, np.round(surv, 3).tolist())
