import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from sgcs_order.densities import (
    B_L,
    DiscreteMarks,
    DualSlopeLoss,
    Faded,
    LognormalMarks,
    ParetoMarks,
    PathlossTransformed,
    PiecewiseConstant,
    PowerLaw,
    PowerLawLoss,
    Product,
    Scaled,
    UnitMarks,
    combine_marks,
    constant,
    cumulative,
    dimension_ratio_factor,
    dual_slope_factor,
    equivalent_1d,
    eval_density,
    fading_transform,
    inverse_cumulative,
    mark_moment,
    pathloss_transform,
    scale,
)
from sgcs_order.exceptions import DivergenceError, FiniteMassError

HIGHWAY = PiecewiseConstant.two_level(2.0, 1.0, 1.0)
GAP = PiecewiseConstant((1.0, 2.0), (1.0, 0.0, 1.0))


def quad_mu(d, r):
    """Independent mass oracle: plain scipy quad over lambda."""
    pts = [p for p in d.discontinuities() if 0 < p < r] or None
    val, _ = integrate.quad(lambda s: float(d.intensity(s)), 0.0, r, points=pts, limit=400, epsabs=1e-12)
    return val


# -- examples ----------------------------------------------------------------


def test_eval_density_examples():
    assert eval_density(equivalent_1d(2, 1.0), 1.0) == pytest.approx(2 * math.pi)
    assert eval_density(scale(constant(1.0), 2.0), 5.0) == pytest.approx(0.5)
    assert eval_density(HIGHWAY, 0.5) == 2.0
    assert eval_density(HIGHWAY, 3.0) == 1.0


def test_cumulative_examples():
    assert cumulative(constant(1.0), 7.0) == pytest.approx(7.0)
    assert cumulative(equivalent_1d(2, 1.0), 2.0) == pytest.approx(4 * math.pi)
    assert cumulative(HIGHWAY, 3.0) == pytest.approx(4.0)


def test_inverse_cumulative_examples():
    assert inverse_cumulative(HIGHWAY, 3.0) == pytest.approx(2.0)
    assert inverse_cumulative(constant(3.0), 6.0) == pytest.approx(2.0)
    assert inverse_cumulative(GAP, 1.0) == pytest.approx(2.0)


def test_highway_inverse_formula():
    alpha, beta, rho = 2.0, 1.0, 1.0
    q = np.linspace(0.0, 10.0, 101)
    expect = np.where(q <= alpha * rho, q / alpha, (q + (beta - alpha) * rho) / beta)
    np.testing.assert_allclose(inverse_cumulative(HIGHWAY, q), expect, rtol=1e-12)


def test_equivalent_1d():
    assert eval_density(equivalent_1d(1, 5.0), 3.7) == pytest.approx(10.0)
    d3 = equivalent_1d(3, 1.0)
    assert eval_density(d3, 2.0) == pytest.approx(4 * math.pi * 4)
    assert B_L == {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}
    with pytest.raises(ValueError):
        equivalent_1d(2, 0.0)
    with pytest.raises(ValueError):
        equivalent_1d(4, 1.0)


def test_scale_examples():
    d = equivalent_1d(2, 1.3)
    a = 2.5
    r = np.linspace(0.01, 20, 50)
    np.testing.assert_allclose(eval_density(scale(d, a), r), eval_density(equivalent_1d(2, 1.3 * a**-2), r), rtol=1e-13)
    np.testing.assert_allclose(eval_density(scale(d, 1.0), r), eval_density(d, r))
    sc = scale(constant(1.0), 3.0)
    assert cumulative(sc, 3.0) == pytest.approx(1.0)
    assert quad_mu(sc, 3.0) == pytest.approx(1.0, abs=1e-10)  # quadrature oracle
    with pytest.raises(ValueError):
        scale(d, 0.0)
    with pytest.raises(ValueError):
        scale(d, -1.0)


def test_scale_composition():
    d = HIGHWAY
    r = np.linspace(0.0, 30.0, 301)
    np.testing.assert_allclose(
        eval_density(scale(scale(d, 1.7), 2.3), r * (1 + 1e-12)),
        eval_density(scale(d, 1.7 * 2.3), r * (1 + 1e-12)),
        rtol=1e-12,
    )


def test_constructors_reject_finite_mass():
    with pytest.raises(FiniteMassError):
        PiecewiseConstant((1.0,), (1.0, 0.0))
    with pytest.raises(ValueError):
        PiecewiseConstant((2.0, 1.0), (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        PowerLaw(1.0, -1.0)


# -- path loss ----------------------------------------------------------------


@pytest.mark.parametrize("loss", [PowerLawLoss(3.5), DualSlopeLoss(3.0, 4.0), DualSlopeLoss(4.0, 3.0, knee=2.5)])
def test_pathloss_round_trip(loss):
    r = np.geomspace(1e-4, 1e4, 400)
    h = loss.h(r)
    assert np.all(np.diff(h) > 0)
    np.testing.assert_allclose(loss.inverse(h), r, rtol=1e-10)
    # derivative against central finite differences away from the knee
    rr = r[(np.abs(r - getattr(loss, "knee", -1)) > 1e-2)]
    fd = (loss.h(rr * (1 + 1e-6)) - loss.h(rr * (1 - 1e-6))) / (2e-6 * rr)
    np.testing.assert_allclose(loss.derivative(rr), fd, rtol=1e-6)


def test_dual_slope_is_continuous_at_knee():
    loss = DualSlopeLoss(3.0, 4.0, knee=2.0)
    assert loss.h(2.0 * (1 - 1e-12)) == pytest.approx(loss.h(2.0 * (1 + 1e-12)), rel=1e-9)


def test_pathloss_transform_power_law_closed_form():
    t = pathloss_transform(equivalent_1d(2, 1.0), 4.0)
    assert isinstance(t, PowerLaw)
    r = np.geomspace(0.01, 100, 30)
    np.testing.assert_allclose(eval_density(t, r), 2 * math.pi / 4 * r**-0.5, rtol=1e-13)


def test_pathloss_transform_identity_exponent():
    assert pathloss_transform(HIGHWAY, 1.0) is HIGHWAY


def test_pathloss_transform_generic_matches_definition():
    loss = PowerLawLoss(2.5)
    t = pathloss_transform(HIGHWAY, loss)
    assert isinstance(t, PathlossTransformed)
    s = np.geomspace(0.05, 50, 40)
    x = s ** (1 / 2.5)
    np.testing.assert_allclose(t.intensity(s), HIGHWAY.intensity(x) / (2.5 * x**1.5), rtol=1e-12)
    # mu_bar agrees with a quadrature of lambda_bar
    for si in (0.3, 1.0, 7.0):
        assert t.cumulative(si) == pytest.approx(quad_mu(t, si), rel=1e-8)


def test_dual_slope_transform_is_beta_times_single_slope():
    d = equivalent_1d(2, 1.0)
    e1, e2 = 3.0, 4.0
    single = pathloss_transform(d, PowerLawLoss(e1))
    dual = pathloss_transform(d, DualSlopeLoss(e1, e2))
    beta = dual_slope_factor(2, e1, e2)
    r = np.concatenate([np.geomspace(0.01, 0.99, 30), np.geomspace(1.01, 1e3, 30)])
    np.testing.assert_allclose(dual.intensity(r), beta(r) * single.intensity(r), rtol=1e-12)
    # and lambda_bar is the derivative of mu_bar (finite differences)
    fd = (dual.cumulative(r * (1 + 1e-6)) - dual.cumulative(r * (1 - 1e-6))) / (2e-6 * r)
    np.testing.assert_allclose(dual.intensity(r), fd, rtol=1e-6)


# -- marks and fading --------------------------------------------------------


def test_mark_moment_examples():
    assert mark_moment(UnitMarks(), 3.3) == 1.0
    assert mark_moment(DiscreteMarks((1.0, 4.0), (0.5, 0.5)), 0.5) == pytest.approx(1.5)
    assert mark_moment(LognormalMarks(0.0, 1.0), 2.0) == pytest.approx(math.e**2)
    assert mark_moment(ParetoMarks(1.5), 2.0) == math.inf


def test_mark_moments_against_monte_carlo(rng):
    w = LognormalMarks(0.0, 1.0).sample(rng, 2_000_000)
    for s, exact in ((0.5, math.exp(1 / 8)), (2.0, math.e**2)):
        x = w**s
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - exact) < 3 * se
        assert mark_moment(LognormalMarks(0.0, 1.0), s) == pytest.approx(exact, rel=1e-12)


def test_lognormal_from_db():
    m = LognormalMarks.from_db(8.0)
    assert m.scale == pytest.approx(8.0 * math.log(10) / 10)


def test_discrete_marks_validation():
    with pytest.raises(ValueError):
        DiscreteMarks((1.0, 2.0), (0.5, 0.49))
    with pytest.raises(ValueError):
        DiscreteMarks((0.0, 2.0), (0.5, 0.5))


def test_combine_marks():
    ln = combine_marks(LognormalMarks(0.1, 0.3), LognormalMarks(0.2, 0.4))
    assert ln.location == pytest.approx(0.3) and ln.scale == pytest.approx(0.5)
    at = combine_marks(DiscreteMarks((1.0, 2.0), (0.5, 0.5)), DiscreteMarks((3.0,), (1.0,)))
    assert at.moment(1.0) == pytest.approx(4.5)
    assert combine_marks(UnitMarks(), ln) is ln


def test_fading_transform_power_law_factor():
    t = fading_transform(equivalent_1d(2, 1.0), LognormalMarks(0.0, 1.0), 4.0)
    assert t.coef / (2 * math.pi) == pytest.approx(1.1331484530668263, rel=1e-12)


def test_fading_transform_unit_is_identity():
    assert fading_transform(HIGHWAY, UnitMarks(), 4.0) is HIGHWAY


def test_faded_discrete_marks_exact():
    f = fading_transform(HIGHWAY, DiscreteMarks((1.0, 4.0), (0.5, 0.5)), 4.0)
    assert isinstance(f, Faded)
    # mu_bar(1) = (mu(1) + mu(sqrt 2)) / 2 = (3 + sqrt 2) / 2
    assert f.cumulative(1.0) == pytest.approx((3 + math.sqrt(2)) / 2, rel=1e-12)
    r = np.geomspace(0.05, 20, 25)
    fd = (f.cumulative(r * (1 + 1e-7)) - f.cumulative(r * (1 - 1e-7))) / (2e-7 * r)
    keep = np.abs(r - 1) > 1e-3
    keep &= np.abs(r - 2**-0.5) > 1e-3
    np.testing.assert_allclose(f.intensity(r[keep]), fd[keep], rtol=1e-5)


def test_faded_lognormal_matches_monte_carlo(rng):
    m = LognormalMarks(0.0, 0.8)
    f = fading_transform(HIGHWAY, m, 4.0)
    w = m.sample(rng, 1_000_000) ** 0.25
    for r in (0.5, 2.0):
        x = HIGHWAY.cumulative(r * w)
        assert abs(f.cumulative(r) - x.mean()) < 4 * x.std() / math.sqrt(x.size)


def test_fading_transform_divergence():
    with pytest.raises(DivergenceError):
        fading_transform(equivalent_1d(2, 1.0), ParetoMarks(0.4), 4.0)
    with pytest.raises(DivergenceError):
        fading_transform(HIGHWAY, ParetoMarks(0.2), 4.0)


def test_pareto_faded_highway_analytic():
    # W >= 1 puts r W past the knee for r = 1, where mu(x) = x + 1, so
    # mu_bar(1) = E[W] + 1 = 2 / (2 - 1) + 1
    f = fading_transform(HIGHWAY, ParetoMarks(2.0), 1.0)
    assert f.cumulative(1.0) == pytest.approx(3.0, rel=1e-7)


def test_product_density():
    base = equivalent_1d(1, 1.0)
    p = Product(base, dimension_ratio_factor(1, 2))
    r = np.geomspace(0.05, 30, 20)
    np.testing.assert_allclose(p.intensity(r), equivalent_1d(2, 1.0).intensity(r), rtol=1e-12)
    np.testing.assert_allclose(p.cumulative(r), equivalent_1d(2, 1.0).cumulative(r), rtol=1e-9)
    np.testing.assert_allclose(p.inverse_cumulative([0.5, 3.0]), equivalent_1d(2, 1.0).inverse_cumulative([0.5, 3.0]), rtol=1e-9)


# -- properties ----------------------------------------------------------------

dims = st.sampled_from([1, 2, 3])
pos = st.floats(0.05, 20.0)


@st.composite
def densities(draw):
    kind = draw(st.sampled_from(["power", "piecewise", "scaled", "transformed"]))
    if kind == "power":
        return PowerLaw(draw(pos), draw(st.floats(-0.8, 2.5)))
    n = draw(st.integers(1, 3))
    bps = np.cumsum(draw(st.lists(st.floats(0.1, 3.0), min_size=n, max_size=n)))
    levels = draw(st.lists(st.one_of(st.just(0.0), st.floats(0.01, 5.0)), min_size=n, max_size=n)) + [draw(pos)]
    pc = PiecewiseConstant(tuple(bps), tuple(levels))
    if kind == "piecewise":
        return pc
    if kind == "scaled":
        return Scaled(pc, draw(st.floats(0.2, 5.0)))
    return pathloss_transform(pc, draw(st.floats(1.5, 5.0)))


@given(densities())
def test_cumulative_monotone_and_inverse(d):
    r = np.linspace(0.0, 100.0, 2001)
    mu = np.asarray(d.cumulative(r))
    assert mu[0] == 0.0
    assert np.all(np.diff(mu) >= -1e-12 * np.maximum(1.0, mu[1:]))
    back = np.asarray(d.inverse_cumulative(mu))
    assert np.all(back >= r * (1 - 1e-8) - 1e-12)
    # equality wherever lambda is positive on a neighbourhood
    h = 1e-6
    pos_nbhd = (np.asarray(d.intensity(r * (1 - h) + 1e-300)) > 0) & (np.asarray(d.intensity(r * (1 + h))) > 0)
    pos_nbhd &= r > 0
    np.testing.assert_allclose(back[pos_nbhd], r[pos_nbhd], rtol=1e-8)


@given(densities(), st.floats(0.1, 10.0))
def test_scale_family_law(d, a):
    r = np.geomspace(1e-3, 100.0, 200)
    np.testing.assert_allclose(scale(d, a).cumulative(r), d.cumulative(r / a), rtol=1e-8, atol=1e-12)


@given(pos, dims, st.floats(0.1, 10.0))
def test_power_law_scaling_closure(lam0, l, a):
    r = np.geomspace(1e-3, 1e3, 50)
    lhs = eval_density(scale(equivalent_1d(l, lam0), a), r)
    rhs = eval_density(equivalent_1d(l, lam0 * a ** (-l)), r)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


@given(densities(), st.floats(1.2, 6.0))
def test_pathloss_mass_preservation(d, eps):
    t = pathloss_transform(d, PowerLawLoss(eps))
    r = np.geomspace(1e-3, 100.0, 100)
    np.testing.assert_allclose(t.cumulative(r**eps), d.cumulative(r), rtol=1e-8, atol=1e-12)


@given(densities(), st.floats(0.5, 6.0))
def test_unit_fading_is_identity(d, eps):
    r = np.linspace(0.0, 50.0, 101)
    np.testing.assert_array_equal(fading_transform(d, UnitMarks(), eps).intensity(r), d.intensity(r))
