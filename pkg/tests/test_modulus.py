import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_search_modulus, step_sym_row, two_point_closed_form
from tccalc.curve import CurveError, step_curve, two_point_curve
from tccalc.harness import FIXTURE_SPACES, load_fixture_space
from tccalc.modulus import (CurveFamily, TestPlan, admissible, enumerate_step_curves,
                            generalized_modulus, is_null_family, marginal_constant, modulus,
                            product_plan, two_point_family)
from tccalc.solvers import minimize_weighted_power
from tccalc.space import FiniteMetricMeasureSpace, random_space


def _family(s, pairs):
    return CurveFamily([two_point_curve(s, x, y) for x, y in pairs], s)


# ---------------------------------------------------------------- admissible

def test_admissible_examples(unit_pair):
    fam = two_point_family(unit_pair)
    assert admissible(np.zeros(2), fam)[0] is False
    ok, slack = admissible(np.array([2.0, 2.0]) / 2, CurveFamily([two_point_curve(unit_pair, 0, 1)]))
    assert ok and slack == 0
    ok, slack = admissible(np.array([5.0, 0.0]), CurveFamily([], unit_pair))
    assert ok and slack == np.inf
    with pytest.raises(ValueError):
        admissible(np.array([-1.0, 3.0]), fam)


def test_family_rejects_trivial_and_polyline_curves(unit_pair, line3, rng):
    from gen import random_polyline
    with pytest.raises(CurveError):
        CurveFamily([step_curve(unit_pair, [0], [0])])
    with pytest.raises(CurveError):
        CurveFamily([random_polyline(rng, line3)])


def test_family_rows_sum_to_variation(rng):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    d = s.float_dist()
    sums = [sum(d[u, v] for u, v in zip(c.points(), c.points()[1:])) for c in fam]
    assert np.allclose(fam.rows.sum(axis=1), sums, atol=1e-14)
    assert np.all(fam.rows >= 0)


# ---------------------------------------------------------------- modulus values

def test_modulus_examples(unit_pair):
    assert modulus(CurveFamily([], unit_pair), 2).value == 0
    res = modulus(CurveFamily([two_point_curve(unit_pair, 0, 1)]), 2)
    assert res.value == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(res.density, [1.0, 1.0], atol=1e-12)
    assert grid_search_modulus(np.array([[0.5, 0.5]]), np.ones(2), 2) == pytest.approx(2, abs=1e-6)


@pytest.mark.parametrize("d,mx,my", [(1, 1, 1), (0.5, 2, 0.25), (3, 1.5, 0.7), (0.1, 1, 9)])
def test_two_point_closed_form(d, mx, my):
    s = FiniteMetricMeasureSpace.from_data([[0, d], [d, 0]], [mx, my])
    res = modulus(CurveFamily([two_point_curve(s, 0, 1)]), 2)
    assert res.value == pytest.approx(two_point_closed_form(d, mx, my), rel=1e-8)
    assert res.slacks.min() >= -1e-12


def _fixture_families(s):
    fams = [two_point_family(s), _family(s, [(0, 1)])]
    enum = CurveFamily(enumerate_step_curves(s, 1), s)
    fams.append(enum)
    if s.n == 3:
        fams += [_family(s, [(0, 1), (1, 2)]), _family(s, [(0, 2)]),
                 CurveFamily([step_curve(s, [0, 1, 2], [0, 0.25, 0.5])], s),
                 CurveFamily([step_curve(s, [0, 2, 0], [0, 0.25, 0.75]),
                              step_curve(s, [1, 2], [0, 0.5])], s)]
    return fams


@pytest.mark.parametrize("name", FIXTURE_SPACES)
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_modulus_against_grid_oracle(name, p):
    s = load_fixture_space(name)
    d, m = s.float_dist(), s.float_weight()
    for fam in _fixture_families(s):
        rows = np.array([step_sym_row(d, c.points()) for c in fam])
        expect = grid_search_modulus(rows, m, p)
        res = modulus(fam, p, s)
        assert abs(res.value - expect) <= 1e-4
        assert res.value <= expect + 1e-9  # the oracle is a feasible upper bound
        assert res.slacks.min() >= -1e-9
        assert res.value == pytest.approx(float(np.sum(m * res.density ** p)), rel=1e-9)


def test_solver_routes_agree(rng):
    for _ in range(10):
        s = random_space(rng, 5)
        fam = CurveFamily(enumerate_step_curves(s, 2), s)
        sub = fam.subfamily(rng.choice(len(fam), 12, replace=False))
        a = modulus(sub, 2, s, method="active-set")
        b = modulus(sub, 2, s, method="dual")
        assert a.value == pytest.approx(b.value, rel=1e-7)


def test_p1_ties_flagged():
    # two equal-weight points joined by one curve: every split of rho is optimal
    s = FiniteMetricMeasureSpace.from_data([[0, 1], [1, 0]], [1, 1])
    res = modulus(CurveFamily([two_point_curve(s, 0, 1)]), 1)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    assert res.unique is False
    # lexicographic tie-break: the lexicographically smallest optimal density
    assert res.density == pytest.approx([0.0, 2.0], abs=1e-9)
    s2 = FiniteMetricMeasureSpace.from_data([[0, 1], [1, 0]], [1, 2])
    res2 = modulus(CurveFamily([two_point_curve(s2, 0, 1)]), 1)
    assert res2.unique is True and res2.density == pytest.approx([2.0, 0.0], abs=1e-9)


def test_weighted_power_general_rows():
    A = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0])
    m = np.array([1.0, 0.5, 2.0])
    for p in (1.0, 1.7, 2.0, 4.0):
        sol = minimize_weighted_power(A, b, m, p)
        assert np.all(A @ sol.x >= b - 1e-9)
        expect = grid_search_modulus(A / b[:, None], m, p)
        assert sol.value == pytest.approx(expect, abs=1e-4)


# ---------------------------------------------------------------- outer measure

def test_outer_measure_properties(rng):
    for _ in range(6):
        s = random_space(rng, 4)
        fam = CurveFamily(enumerate_step_curves(s, 2), s)
        assert modulus(fam.subfamily([]), 2, s).value == 0
        for _ in range(5):
            a = rng.choice(len(fam), 6, replace=False)
            b = rng.choice(len(fam), 6, replace=False)
            small, big = fam.subfamily(a), fam.subfamily(np.union1d(a, b))
            ma, mb = modulus(small, 2, s).value, modulus(fam.subfamily(b), 2, s).value
            mu = modulus(big, 2, s).value
            assert ma <= mu and modulus(fam.subfamily(b), 2, s).value <= mu
            assert mu <= ma + mb + 1e-7


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
       lam=st.floats(0.1, 10))
def test_modulus_scaling(seed, p, lam):
    # stretching distances by lam scales every constraint row by lam
    rng = np.random.default_rng(seed)
    s = random_space(rng, 3)
    t = FiniteMetricMeasureSpace.from_data(lam * s.float_dist(), s.float_weight())
    pairs = [(0, 1), (1, 2)]
    v1 = modulus(_family(s, pairs), p, s).value
    v2 = modulus(_family(t, pairs), p, t).value
    assert v2 == pytest.approx(v1 * lam ** -p, rel=1e-6)


# ---------------------------------------------------------------- null families

def test_null_family_examples(unit_pair, rng):
    ok, w = is_null_family(CurveFamily([], unit_pair), 2, unit_pair)
    assert ok and w.tolist() == [0, 0]
    s = random_space(rng, 3)
    same = CurveFamily([two_point_curve(s, 0, 1), two_point_curve(s, 0, 1, (0, 2))], s)
    assert np.array_equal(same.rows[0], same.rows[1])
    ok, w = is_null_family(same, 2, s)
    assert not ok and w is None


def test_zero_weight_point_gives_infinite_witness():
    # unchecked space: point 2 carries no mass
    s = FiniteMetricMeasureSpace.from_data([[0, 1, 1], [1, 0, 1], [1, 1, 0]], [1.0, 1.0, 0.0])
    fam = CurveFamily([two_point_curve(s, 0, 2), two_point_curve(s, 2, 1)], s)
    ok, w = is_null_family(fam, 2, s)
    assert ok and np.isinf(w[2]) and w[0] == 0


# ---------------------------------------------------------------- generalized modulus

def test_dirac_plans_agree_bit_identically(rng):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 2), s).subfamily(range(0, 60, 7))
    plans = [TestPlan.dirac(c) for c in fam]
    for p in (1.0, 2.0, 2.5):
        a, b = generalized_modulus(plans, p, s), modulus(fam, p, s)
        assert a.value == b.value and np.array_equal(a.density, b.density)
    assert generalized_modulus([], 2, s).value == 0


def test_mixture_plan_against_oracle(unit_pair):
    s = FiniteMetricMeasureSpace.from_data([[0, 1], [1, 0]], [1.0, 3.0])
    c1 = two_point_curve(s, 0, 1)
    c2 = step_curve(s, [0, 1, 0], [0, 0.25, 0.5])
    mix = TestPlan([c1, c2], [0.5, 0.5], s)
    row = 0.5 * step_sym_row(s.float_dist(), [0, 1]) + 0.5 * step_sym_row(s.float_dist(), [0, 1, 0])
    expect = grid_search_modulus(row[None, :], s.float_weight(), 2)
    got = generalized_modulus([mix], 2, s).value
    assert got == pytest.approx(expect, abs=1e-6)
    singles = [modulus(CurveFamily([c], s), 2, s).value for c in (c1, c2)]
    assert min(singles) - 1e-12 <= got <= max(singles) + 1e-12


def test_testplan_validation(unit_pair):
    c = two_point_curve(unit_pair, 0, 1)
    with pytest.raises(ValueError):
        TestPlan([c], [0.0], unit_pair)
    with pytest.raises(CurveError):
        TestPlan([two_point_curve(unit_pair, 0, 1, (0, 2))], [1.0], unit_pair)


# ---------------------------------------------------------------- marginals

def _marginal_oracle(plan, s, grid=2049):
    m = s.float_weight()
    best = 0.0
    for t in np.linspace(0, 1, grid):
        marg = np.zeros(s.n)
        for c, w in zip(plan.curves, plan.weights):
            pts = c.points()
            starts = [p.start for p in c.pieces]
            marg[pts[np.searchsorted(starts, t, side="right") - 1]] += w
        best = max(best, float(np.max(marg / m)))
    return best


def test_marginal_constant_examples(unit_pair, rng):
    assert marginal_constant(TestPlan.dirac(two_point_curve(unit_pair, 0, 1))) == 1
    assert marginal_constant(TestPlan([], [], unit_pair)) == 0
    s = random_space(rng, 4)
    plan = TestPlan([step_curve(s, [0, 1], [0, 0.3]), step_curve(s, [0, 2, 3], [0, 0.6, 0.8])],
                    [0.5, 0.5], s)
    assert marginal_constant(plan) == pytest.approx(_marginal_oracle(plan, s), rel=1e-15)


def test_product_plan_structure(rng):
    s = random_space(rng, 5)
    d = s.float_dist()
    x, y = 0, 1
    r = 0.49 * d[x, y]
    plan = product_plan(s, x, y, r)
    assert sum(plan.weights) == pytest.approx(1.0, abs=1e-14)
    assert marginal_constant(plan) < np.inf
    with pytest.raises(ValueError):
        product_plan(s, x, y, d[x, y] / 2)
    single = product_plan(s, x, y, 0.0)
    assert len(single.curves) == 1 and single.curves[0] == two_point_curve(s, x, y)
