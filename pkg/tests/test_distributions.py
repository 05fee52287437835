import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firm.distributions import (
    EmpiricalSample,
    Gaussian,
    HuberParams,
    PiecewiseLinearCdf,
    PointMassExponentialTail,
    SolverError,
    category_probabilities,
    cdf,
    expectile,
    huber_quantile,
    huber_residual,
    is_quantile,
    quantile,
)

SHOWER = PointMassExponentialTail(0.7, 20.0, 0.0)

# Frozen from independent brute-force oracles (see _trapezoid_huber_oracle):
# trapezoid integration of both sides on a 1e-4 grid, and quad on the
# expectile first-order condition, each solved by plain bisection.
SHOWER_HUBER_A2 = 3.173824124489933
SHOWER_EXPECTILE = 12.441842125340767


def _shower_cdf(t):
    t = np.asarray(t, float)
    return np.where(t < 0, 0.0, 1 - 0.3 * np.exp(-t / 20))


def _trapezoid_huber_oracle(alpha, a, lo, hi, h=1e-4):
    def resid(x):
        g1 = np.linspace(x - a, x, int(round(a / h)) + 1)
        g2 = np.linspace(x, x + a, int(round(a / h)) + 1)
        below = np.sum((_shower_cdf(g1[1:]) + _shower_cdf(g1[:-1])) / 2 * np.diff(g1))
        above = np.sum((2 - _shower_cdf(g2[1:]) - _shower_cdf(g2[:-1])) / 2 * np.diff(g2))
        return (1 - alpha) * below - alpha * above

    for _ in range(60):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if resid(mid) < 0 else (lo, mid)
    return (lo + hi) / 2


class TestCdf:
    def test_gaussian_symmetry(self):
        assert cdf(Gaussian(0, 1), 0) == 0.5

    def test_point_mass_tail_atom(self):
        assert cdf(SHOWER, 0.0) == pytest.approx(0.7, abs=1e-15)
        assert cdf(SHOWER, -1e-9) == 0.0
        assert SHOWER.cdf_left(0.0) == 0.0

    def test_point_mass_tail_formula(self):
        for t in (0.5, 10.0, 100.0):
            assert cdf(SHOWER, t) == pytest.approx(1 - 0.3 * math.exp(-t / 20), abs=1e-15)

    def test_piecewise_midpoint(self):
        assert cdf(PiecewiseLinearCdf.from_knots([(0, 0), (10, 1)]), 5) == 0.5

    def test_empirical_right_continuous(self):
        F = EmpiricalSample((1.0, 2.0, 2.0, 3.0))
        assert F.cdf(2.0) == 0.75
        assert F.cdf_left(2.0) == 0.25
        assert F.cdf(0.99) == 0.0 and F.cdf(3.0) == 1.0


@pytest.mark.parametrize(
    "F",
    [
        Gaussian(2, 3),
        SHOWER,
        PiecewiseLinearCdf.from_knots([(0, 0.1), (1, 0.1), (4, 0.6), (5, 1.0)]),
        EmpiricalSample((0, 0, 1, 5, 5, 5, 7)),
    ],
    ids=["gaussian", "point-exp", "piecewise-flat", "empirical"],
)
def test_cdf_is_nondecreasing_with_limits(F):
    t = np.linspace(-50, 1000, 8001)
    vals = np.array([F.cdf(x) for x in t])
    assert np.all(np.diff(vals) >= 0)
    assert vals[0] == pytest.approx(0, abs=1e-12)
    assert vals[-1] == pytest.approx(1, abs=1e-12)


class TestQuantile:
    def test_gaussian_median(self):
        assert quantile(Gaussian(1, 1), 0.5) == 1

    def test_point_mass_tail_analytic(self):
        assert quantile(SHOWER, 0.75) == pytest.approx(20 * math.log(1.2), rel=1e-14)

    def test_point_mass_tail_by_bisection(self):
        lo, hi = 0.0, 100.0
        for _ in range(200):
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if 1 - 0.3 * math.exp(-mid / 20) < 0.75 else (lo, mid)
        assert quantile(SHOWER, 0.75) == pytest.approx(hi, abs=1e-12)

    def test_quantile_at_atom(self):
        assert quantile(SHOWER, 0.6) == 0.0

    def test_flat_stretch_returns_infimum(self):
        F = PiecewiseLinearCdf.from_knots([(0, 0), (1, 0.5), (3, 0.5), (4, 1)])
        assert quantile(F, 0.5) == 1.0
        assert is_quantile(F, 0.5, 2.0) and is_quantile(F, 0.5, 3.0)
        assert not is_quantile(F, 0.5, 3.5)

    def test_empirical_lower_quantile(self):
        F = EmpiricalSample((3, 1, 2, 4))
        assert quantile(F, 0.5) == 2.0
        assert quantile(F, 0.51) == 3.0
        assert quantile(EmpiricalSample(tuple(range(10))), 0.3) == 2.0

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_level_must_be_interior(self, alpha):
        with pytest.raises(ValueError):
            quantile(Gaussian(0, 1), alpha)

    @pytest.mark.parametrize(
        "F",
        [Gaussian(-3, 0.5), SHOWER, EmpiricalSample((0, 0, 0, 1, 2, 2, 9)),
         PiecewiseLinearCdf.from_knots([(0, 0.2), (1, 0.2), (2, 0.9), (6, 1)])],
    )
    def test_generalized_inverse_coupling(self, F):
        for alpha in np.linspace(0.01, 0.99, 99):
            q = quantile(F, alpha)
            assert F.cdf(q) >= alpha - 1e-12
            assert F.cdf(q - 1e-9) < alpha or F.cdf_left(q) < alpha + 1e-12
            assert is_quantile(F, alpha, q, tol=1e-12)


class TestPartialMoments:
    """Closed-form partial moments against brute-force Riemann sums."""

    @pytest.mark.parametrize(
        "F",
        [Gaussian(1, 2), SHOWER, PiecewiseLinearCdf.from_knots([(0, 0.3), (2, 0.5), (5, 1)]),
         EmpiricalSample((0, 1, 1, 4))],
    )
    def test_against_grid_integration(self, F):
        step = 0.01
        mids = np.arange(-60, 300, step) + step / 2
        vals = np.array([F.cdf(t) for t in mids])
        for x in (-1.0, 0.5, 2.0, 7.0):
            below = mids < x
            assert F.lower_partial(x) == pytest.approx(np.sum(vals[below]) * step, abs=0.02)
            assert F.upper_partial(x) == pytest.approx(np.sum(1 - vals[~below]) * step, abs=0.02)

    @pytest.mark.parametrize(
        "F", [Gaussian(1, 2), SHOWER, PiecewiseLinearCdf.from_knots([(0, 0.3), (2, 0.5), (5, 1)]),
              EmpiricalSample((0, 1, 1, 4))]
    )
    def test_put_call_parity(self, F):
        # E[(x-Y)^+] - E[(Y-x)^+] = x - E[Y]
        for x in (-3.0, 0.0, 1.5, 10.0):
            assert F.lower_partial(x) - F.upper_partial(x) == pytest.approx(x - F.mean(), abs=1e-12)


class TestHuberQuantile:
    @pytest.mark.parametrize("a", [0.1, 1.0, 5.0, math.inf])
    def test_symmetric_gaussian_centre(self, a):
        assert huber_quantile(Gaussian(4.0, 2.5), 0.5, a) == pytest.approx(4.0, abs=1e-9)

    @pytest.mark.parametrize(
        "F", [Gaussian(1, 2), SHOWER, EmpiricalSample((0, 0, 0, 10)),
              PiecewiseLinearCdf.from_knots([(0, 0.3), (2, 0.5), (5, 1)])]
    )
    def test_half_with_infinite_distance_is_mean(self, F):
        assert huber_quantile(F, 0.5, math.inf) == pytest.approx(F.mean(), abs=1e-9)

    def test_zero_distance_is_quantile(self):
        assert huber_quantile(SHOWER, HuberParams(0.75, 0.0)) == quantile(SHOWER, 0.75)

    def test_shower_a2_matches_trapezoid_oracle(self):
        assert huber_quantile(SHOWER, 0.75, 2.0) == pytest.approx(SHOWER_HUBER_A2, abs=1e-6)

    def test_frozen_value_reproduced_by_oracle(self):
        assert _trapezoid_huber_oracle(0.75, 2.0, 0.5, 20.0) == pytest.approx(SHOWER_HUBER_A2, abs=1e-8)

    def test_residual_at_solution(self):
        for a in (0.01, 2.0, 30.0, math.inf):
            x = huber_quantile(SHOWER, 0.75, a)
            assert huber_residual(SHOWER, x, 0.75, a).relative < 1e-8

    def test_nondecreasing_residual(self):
        xs = np.linspace(-20, 60, 401)
        r = [huber_residual(SHOWER, x, 0.3, 4.0).value for x in xs]
        assert np.all(np.diff(r) >= -1e-15)

    def test_location_equivariance(self):
        base = PiecewiseLinearCdf.from_knots([(0, 0.1), (1, 0.4), (3, 0.9), (8, 1)])
        shifted = PiecewiseLinearCdf.from_knots([(v + 7.5, p) for v, p in zip(base.values, base.cum_probs)])
        for alpha, a in [(0.2, 0.5), (0.75, 2.0), (0.9, math.inf)]:
            assert huber_quantile(shifted, alpha, a) == pytest.approx(huber_quantile(base, alpha, a) + 7.5, abs=1e-8)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            HuberParams(0.5, -1.0)
        with pytest.raises(ValueError):
            HuberParams(1.0, 1.0)

    def test_solver_failure_carries_bracket(self):
        with pytest.raises(SolverError) as err:
            huber_quantile(Gaussian(0, 1), 0.8, 1.0, maxiter=3, xtol=0.0)
        lo, hi = err.value.bracket
        assert lo < hi


@st.composite
def piecewise_cdfs(draw):
    n = draw(st.integers(2, 8))
    gaps = draw(st.lists(st.floats(0.05, 5.0), min_size=n - 1, max_size=n - 1))
    start = draw(st.floats(-10, 10))
    values = np.concatenate([[start], start + np.cumsum(gaps)])
    incr = draw(st.lists(st.floats(0.01, 1.0), min_size=n - 1, max_size=n - 1))
    probs = np.concatenate([[0.0], np.cumsum(incr)])
    probs /= probs[-1]
    probs[-1] = 1.0
    return PiecewiseLinearCdf(tuple(values), tuple(probs))


@settings(max_examples=60, deadline=None)
@given(F=piecewise_cdfs(), alpha=st.floats(0.05, 0.95))
def test_huber_limit_to_quantile(F, alpha):
    q = quantile(F, alpha)
    for a in (0.1, 0.01, 0.001):
        # the Huber quantile lies within a of the quantile interval
        x = huber_quantile(F, alpha, a)
        assert F.cdf(x + a) >= alpha - 1e-9 and F.cdf_left(x - a) <= alpha + 1e-9
    assert abs(huber_quantile(F, alpha, 1e-4) - q) < 2e-3


@settings(max_examples=40, deadline=None)
@given(F=piecewise_cdfs(), alpha=st.floats(0.05, 0.95), a=st.floats(0.01, 10), c=st.floats(-50, 50))
def test_huber_shift_equivariance(F, alpha, a, c):
    G = PiecewiseLinearCdf(tuple(v + c for v in F.values), F.cum_probs)
    assert huber_quantile(G, alpha, a) == pytest.approx(huber_quantile(F, alpha, a) + c, abs=1e-7)


class TestExpectile:
    def test_gaussian_mean(self):
        assert expectile(Gaussian(3, 2), 0.5) == pytest.approx(3, abs=1e-10)

    def test_sample_mean(self):
        assert expectile(EmpiricalSample((0, 0, 0, 10)), 0.5) == pytest.approx(2.5, abs=1e-10)

    def test_shower_matches_quadrature_oracle(self):
        assert expectile(SHOWER, 0.75) == pytest.approx(SHOWER_EXPECTILE, abs=1e-6)

    def test_right_skew_expectile_exceeds_quantile(self):
        assert expectile(SHOWER, 0.75) > quantile(SHOWER, 0.75)

    def test_first_order_condition(self):
        x = expectile(Gaussian(-2, 4), 0.9)
        F = Gaussian(-2, 4)
        assert 0.9 * F.upper_partial(x) == pytest.approx(0.1 * F.lower_partial(x), rel=1e-10)


def test_category_probabilities_from_cdf():
    p = category_probabilities(Gaussian(1, 1), (0, 2))
    assert p.sum() == pytest.approx(1)
    np.testing.assert_allclose(p, [0.158655, 0.682689, 0.158655], atol=1e-6)


def test_quantile_construction_from_pairs():
    F = PiecewiseLinearCdf.from_quantiles([0.25, 0.5, 0.75], [10.0, 20.0, 40.0])
    assert quantile(F, 0.5) == pytest.approx(20.0)
    assert F.cdf(40.0) == pytest.approx(0.75)
    assert F.values[0] == pytest.approx(0.0) and F.cum_probs[0] == 0.0
    assert F.values[-1] == pytest.approx(60.0)


def test_quantile_construction_with_lower_bound_atom():
    F = PiecewiseLinearCdf.from_quantiles([0.5, 0.9], [2.0, 10.0], lower_bound=0.0)
    assert F.values[0] == 0.0
    assert F.cum_probs[0] == pytest.approx(0.4)
    assert F.cdf(0.0) == pytest.approx(0.4)


def test_invalid_representations():
    with pytest.raises(ValueError):
        EmpiricalSample(())
    with pytest.raises(ValueError):
        PiecewiseLinearCdf.from_knots([(0, 0), (0, 1)])
    with pytest.raises(ValueError):
        PiecewiseLinearCdf.from_knots([(0, 0), (1, 0.9)])
    with pytest.raises(ValueError):
        Gaussian(0, -1)
