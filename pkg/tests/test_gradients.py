from fractions import Fraction

import numpy as np
import pytest

from oracles import grid_search_modulus, hajlasz_violations, mcshane
from tccalc.curve import step_curve, two_point_curve
from tccalc.gradients import (hajlasz_check, mcshane_extend, minimal_hajlasz, norms, pipeline_76,
                              pipeline_bounded_lemma, pipeline_uno, plan_check, tolerance,
                              truncation_levels, upper_s_check, weak_upper_s_check)
from tccalc.harness import hajlasz_pair
from tccalc.modulus import (CurveFamily, TestPlan, enumerate_step_curves, modulus, product_plan,
                            two_point_family)
from tccalc.space import FiniteMetricMeasureSpace, lp_norm, random_space
from tccalc.stieltjes import sym_integrate


@pytest.fixture
def pair_space():
    return FiniteMetricMeasureSpace.from_data([[0, 1], [1, 0]], [1, 1])


# ---------------------------------------------------------------- Hajlasz

def test_hajlasz_examples(pair_space, rng):
    s = random_space(rng, 4)
    assert hajlasz_check(np.full(4, 3.0), np.zeros(4), s).ok
    rep = hajlasz_check([Fraction(0), Fraction(1)], [Fraction(1, 2), Fraction(1, 2)], pair_space)
    assert rep.ok and rep.extra["exact"]
    rep = hajlasz_check([0.0, 1.0], [0.4, 0.4], pair_space)
    assert rep.pairs() == {(0, 1)}
    assert rep.witnesses[0].deficit == pytest.approx(0.2, abs=1e-15)


def test_hajlasz_matches_oracle(rng):
    for _ in range(20):
        s = random_space(rng, 5)
        f, g = rng.normal(size=5), rng.uniform(0, 1, 5)
        assert hajlasz_check(f, g, s).pairs() == hajlasz_violations(f, g, s.float_dist())


def test_hajlasz_except_points(rng):
    s = random_space(rng, 4)
    f = np.array([0.0, 0.0, 0.0, 100.0])
    assert not hajlasz_check(f, np.zeros(4), s).ok
    assert hajlasz_check(f, np.zeros(4), s, except_=[3]).ok


def test_tolerance_env_override(monkeypatch, pair_space):
    monkeypatch.setenv("MS_TOLERANCE", "0.5")
    assert tolerance() == 0.5
    assert hajlasz_check([0.0, 1.0], [0.4, 0.4], pair_space).ok


def test_minimal_hajlasz_examples(pair_space, rng):
    g, norm = minimal_hajlasz(np.full(3, 2.0), random_space(rng, 3), 2)
    assert np.all(g == 0) and norm == 0
    g, norm = minimal_hajlasz([0.0, 1.0], pair_space, 2)
    assert np.allclose(g, [0.5, 0.5], atol=1e-12) and norm ** 2 == pytest.approx(0.5, abs=1e-12)
    # grid oracle: Hajlasz constraints are rows (1/d, 1/d) * d / |df| scaled to >= 1
    s = FiniteMetricMeasureSpace.from_data([[0, 2], [2, 0]], [1.0, 3.0])
    g, norm = minimal_hajlasz([0.0, 1.0], s, 2)
    assert norm ** 2 == pytest.approx(grid_search_modulus(np.array([[2.0, 2.0]]), s.float_weight(), 2),
                                      abs=1e-6)


def test_minimal_hajlasz_is_hajlasz_and_scales(rng):
    for p in (1.0, 2.0, 3.0):
        s = random_space(rng, 5)
        f = rng.normal(size=5)
        g, norm = minimal_hajlasz(f, s, p)
        assert hajlasz_check(f, g, s, tol=1e-9).ok
        assert norm == pytest.approx(lp_norm(g, s, p), rel=1e-9)
        for c in (-2.5, 0.1, 7.0):
            assert minimal_hajlasz(c * f, s, p)[1] == pytest.approx(abs(c) * norm, rel=1e-6)


# ---------------------------------------------------------------- McShane

def test_mcshane_examples(rng):
    s = random_space(rng, 5)
    d = s.float_dist()
    f = rng.normal(size=5) * 0.01
    assert np.allclose(mcshane_extend(f, range(5), 10.0, s), f)
    assert np.allclose(mcshane_extend({2: 0.0}, [2], 1.0, s), d[2])
    with pytest.raises(ValueError):
        mcshane_extend(f, [], 1.0, s)
    with pytest.raises(ValueError):
        mcshane_extend(np.array([0.0, 100.0, 0, 0, 0]), [0, 1], 1.0, s)


def test_mcshane_properties(rng):
    for _ in range(20):
        s = random_space(rng, 6)
        d = s.float_dist()
        E = sorted(rng.choice(6, int(rng.integers(1, 6)), replace=False).tolist())
        lip = float(rng.uniform(1, 5))
        f = mcshane(rng.normal(size=6), [0], lip, d)  # lip-Lipschitz on all points
        ext = mcshane_extend(f, E, lip, s)
        assert np.allclose(ext, mcshane(f, E, lip, d), atol=1e-15)
        assert np.allclose(ext[E], f[E], atol=1e-12)
        diff = np.abs(ext[:, None] - ext[None, :]) - lip * d
        assert diff.max() <= 1e-12
        assert np.allclose(mcshane_extend(ext, range(6), lip, s), ext)


# ---------------------------------------------------------------- upper S-gradients

def test_upper_s_examples(pair_space, rng):
    s = random_space(rng, 3)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    assert upper_s_check(np.ones(3), np.zeros(3), fam).ok
    c = CurveFamily([two_point_curve(pair_space, 0, 1)])
    rep = upper_s_check([0.0, 1.0], [1.0, 1.0], c)
    assert rep.ok


def test_upper_s_vectorized_matches_loop(rng):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    f, g = rng.normal(size=4), rng.uniform(0, 2, 4)
    fast = upper_s_check(f, g, fam).pairs()
    slow = {i for i, c in enumerate(fam)
            if abs(f[c.points()[-1]] - f[c.points()[0]]) > sym_integrate(c, g) + 1e-9}
    assert fast == slow
    assert upper_s_check(f, g, list(fam)).pairs() == slow


def test_two_point_reduction_is_hajlasz_with_half(rng):
    for _ in range(20):
        s = random_space(rng, 5)
        f, g = rng.normal(size=5), rng.uniform(0, 2, 5)
        fam = two_point_family(s)
        curves = {tuple(sorted(c.points())) for i, c in enumerate(fam)
                  if i in upper_s_check(f, g, fam).pairs()}
        assert curves == hajlasz_check(f, g / 2, s).pairs()


def test_monotone_in_g(rng):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    f, g = rng.normal(size=4), rng.uniform(0, 2, 4)
    bigger = g + rng.uniform(0, 1, 4)
    assert upper_s_check(f, bigger, fam).pairs() <= upper_s_check(f, g, fam).pairs()
    assert hajlasz_check(f, bigger, s).pairs() <= hajlasz_check(f, g, s).pairs()


def test_weak_upper_s_examples(rng):
    s = random_space(rng, 4)
    f, gh = hajlasz_pair(rng, s)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    rep = weak_upper_s_check(f, 2 * gh, fam, 2, s)
    assert rep.ok and rep.modulus == 0 and rep.extra["null"]
    assert rep.extra["gamma1_size"] == 0 and rep.extra["gamma1_modulus"] == 0


def test_planted_violation_has_positive_modulus(rng):
    s = random_space(rng, 4)
    f = np.array([0.0, 1.0, 0.0, 0.0])
    g = np.array([1e-3, 1e-3, 1e6, 1e6])
    fam = two_point_family(s)
    rep = weak_upper_s_check(f, g, fam, 2, s)
    assert {tuple(sorted(fam.curves[i].points())) for i in rep.pairs()} == {(0, 1)}
    single = CurveFamily([two_point_curve(s, 0, 1)], s)
    assert rep.modulus == pytest.approx(modulus(single, 2, s).value, rel=1e-9)
    assert rep.modulus > 0 and not rep.extra["null"]
    assert rep.extra["gamma3_size"] == 2


def test_zero_function_charged_nowhere_passes(rng):
    # f vanishes except on a point that no arena curve visits
    s = random_space(rng, 4)
    curves = [c for c in enumerate_step_curves(s, 2) if 3 not in c.points()]
    fam = CurveFamily(curves, s)
    f = np.array([0.0, 0.0, 0.0, 5.0])
    rep = weak_upper_s_check(f, np.zeros(4), fam, 2, s)
    assert rep.ok and rep.extra["null"]


def test_gamma_families(rng):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 3), s)
    f, g = rng.normal(size=4), rng.uniform(0, 1, 4)
    rep = weak_upper_s_check(f, g, fam, 2, s)
    # a violating curve has a violating single jump or a violating sub-arc
    assert rep.extra["gamma2_size"] >= len(rep.witnesses) > 0
    g_inf = g.copy()
    g_inf[0] = np.inf
    rep = weak_upper_s_check(f, g_inf, fam, 2, s)
    touching = sum(1 for c in fam if 0 in c.points())
    assert rep.extra["gamma1_size"] == touching


# ---------------------------------------------------------------- plans

def test_plan_examples(rng):
    s = random_space(rng, 4)
    f, g = rng.normal(size=4), rng.uniform(0, 2, 4)
    curves = [step_curve(s, [0, 2, 1], [0, 0.25, 0.5]), two_point_curve(s, 3, 1)]
    for c in curves:
        assert plan_check(f, g, [TestPlan.dirac(c)]).ok == upper_s_check(f, g, [c]).ok
    flat = np.array([1.0, 2.0, 1.0, 4.0])
    loop = TestPlan([step_curve(s, [0, 1, 2], [0, 0.5, 0.75])], [1.0], s)
    rep = plan_check(flat, np.zeros(4), [loop])
    assert rep.ok and rep.checked == 1


def test_product_plan_reduces_to_hajlasz(rng):
    for _ in range(10):
        s = random_space(rng, 5)
        d = s.float_dist()
        r = 0.25 * d[d > 0].min()
        idx = [(x, y) for x in range(5) for y in range(x + 1, 5)]
        plans = [product_plan(s, x, y, r) for x, y in idx]
        f, g = rng.normal(size=5), rng.uniform(0, 2, 5)
        got = {idx[i] for i in plan_check(f, g, plans).pairs()}
        assert got == hajlasz_violations(f, g / 2, d)


# ---------------------------------------------------------------- pipelines

def test_pipeline_uno(rng):
    s = random_space(rng, 4)
    assert pipeline_uno(np.ones(4), np.zeros(4), 2, s).ok
    f, gh = hajlasz_pair(rng, s)
    rep = pipeline_uno(f, 2 * gh, 2, s)
    assert rep.ok and rep.data["arena_size"] == 12
    # the modulus-optimal arena gradient, used as g
    fam = two_point_family(s)
    from tccalc.gradients import arena_gradient_infimum
    g, _ = arena_gradient_infimum(f, s, 2, fam)
    assert pipeline_uno(f, g * (1 + 1e-9), 2, s).ok


def test_pipeline_bounded_examples(rng, pair_space):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    assert pipeline_bounded_lemma(np.zeros(4), np.zeros(4), s, fam).ok
    # on a two-point curve the 18g bound has slack factor 9 over the Hajlasz bound
    f, g = np.array([0.0, 1.0]), np.array([0.5, 0.5])
    c = CurveFamily([two_point_curve(pair_space, 0, 1)])
    rep = pipeline_bounded_lemma(f, g, pair_space, c)
    assert rep.ok
    eighteen = next(ch for ch in rep.checks if ch.name == "eighteen_g")
    assert eighteen.checked == 1 and 18 * sym_integrate(c.curves[0], g) == 9 * 1.0


def test_pipeline_bounded_random(rng):
    for _ in range(5):
        s = random_space(rng, 5)
        fam = CurveFamily(enumerate_step_curves(s, 2), s)
        f, g = hajlasz_pair(rng, s)
        rep = pipeline_bounded_lemma(f, g, s, fam, M=[0.3, 1.0])
        assert rep.ok, rep.to_json()


def test_pipeline_bounded_flags_precondition(rng):
    s = random_space(rng, 3)
    fam = CurveFamily(enumerate_step_curves(s, 1), s)
    rep = pipeline_bounded_lemma(np.array([0.0, 5.0, 0.0]), np.zeros(3), s, fam)
    assert not rep.precondition_ok


def test_truncation_levels():
    assert truncation_levels(np.array([0.3, 1.0, 5.0]))[-1] >= 3
    levels = truncation_levels(np.array([0.0, 0.0]))
    assert 0 in levels


def test_pipeline_76_bounded_g_reduces(rng):
    s = random_space(rng, 4)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    f, g = hajlasz_pair(rng, s)
    rep = pipeline_76(f, g, 2, s, fam)
    assert rep.ok
    k0 = rep.data["stabilized_at"]
    assert np.all(g <= 2.0 ** k0)
    # once E_k is everything the extension returns f itself
    assert np.allclose(mcshane_extend(f, range(4), 2.0 ** (k0 + 1), s), f)
    assert pipeline_76(np.ones(4), np.zeros(4), 2, s, fam).ok


def test_pipeline_76_planted_large_value(rng):
    s = random_space(rng, 5)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    f, g = hajlasz_pair(rng, s)
    g[2] = 2.0 ** 12
    rep = pipeline_76(f, g, 2, s, fam)
    assert rep.ok
    names = {c.name for c in rep.checks}
    assert any(n.startswith("pairwise_hajlasz") for n in names)
    assert any(n.startswith("agree_on_E") for n in names)
    assert rep.data["max_ratio"] <= 76


# ---------------------------------------------------------------- norms

def test_norms_examples(pair_space, rng):
    s = random_space(rng, 3)
    fam = CurveFamily(enumerate_step_curves(s, 2), s)
    out = norms(np.zeros(3), s, 2, fam)
    assert out["M_norm"] == 0 and out["N_TC_norm_upper"] == 0
    fam2 = CurveFamily(enumerate_step_curves(pair_space, 1), pair_space)
    out = norms([0.0, 1.0], pair_space, 2, fam2)
    assert out["M_norm"] == pytest.approx(1.0 + np.sqrt(0.5), abs=1e-12)
    assert "lower bound" in out["caveat"]


def test_norms_sandwich(rng):
    for _ in range(5):
        s = random_space(rng, 4)
        fam = CurveFamily(enumerate_step_curves(s, 2), s)
        f = rng.normal(size=4)
        out = norms(f, s, 2, fam)
        assert out["sandwich_half_to_76"] and out["sandwich_transfer"]
