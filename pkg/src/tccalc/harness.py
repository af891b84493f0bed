"""Verification suites run by ``tccalc verify``.

Each suite draws seeded instances on the bundled fixture spaces plus ``K``
random spaces (``k`` points uniform in the unit square with Euclidean
distances, weights uniform on ``[0.5, 2]``, ``k`` cycling through 2..5) and
returns a JSON-ready report with its violation rows.
"""
from __future__ import annotations

import json
from importlib import resources
from typing import Optional

import numpy as np

from .gradients import (hajlasz_check, minimal_hajlasz, pipeline_76, pipeline_bounded_lemma,
                        pipeline_uno, plan_check, tolerance, upper_s_check)
from .modulus import (CurveFamily, TestPlan, admissible, enumerate_step_curves,
                      marginal_constant, modulus, product_plan)
from .space import FiniteMetricMeasureSpace, lp_norm, random_space, validate_space

SUITES = ("uno", "bounded18", "seventysix", "plans", "fuglede")

ANCHORS = {
    "uno": "Theorem: g/2 is a Hajłasz gradient",
    "bounded18": "Lemma: |f(γ(0)) − f(γ(1))| ≤ ∫^S_γ 18g",
    "seventysix": "Theorem: 76 g̃ upper S-gradient",
    "plans": "Theorem: product plan μ_{x,r} ⊗ μ_{y,r} yields the Hajłasz inequality",
    "fuglede": "Lemma: Fuglede subsequence, Mod^p(Γ_k) ≤ 2^(−k)",
}

FIXTURE_SPACES = ("two_point_space", "two_point_weighted_space", "three_point_line_space",
                  "three_point_triangle_space", "three_point_uniform_space")


def fixture_path(name: str):
    return resources.files("tccalc") / "fixtures" / f"{name}.json"


def load_fixture_space(name: str) -> FiniteMetricMeasureSpace:
    from .io import space_from_json
    return space_from_json(json.loads(fixture_path(name).read_text()), name)


def spaces_for(seed: int, count: int, fixtures: bool = True) -> list:
    """``(space_id, space)`` pairs: bundled fixtures first, then seeded random spaces."""
    out = []
    if fixtures:
        out.extend((f"fixture:{name}", load_fixture_space(name)) for name in FIXTURE_SPACES)
    rng = np.random.default_rng(seed)
    for i in range(count):
        out.append((f"random:{i}", random_space(rng, 2 + i % 4)))
    return out


def hajlasz_pair(rng: np.random.Generator, s: FiniteMetricMeasureSpace, p: float = 2.0) -> tuple:
    """Random ``f`` with a Hajlasz gradient ``g`` at or above the minimal one."""
    f = rng.uniform(-1.0, 1.0, s.n)
    g0, _ = minimal_hajlasz(f, s, p)
    g = g0 * (1.0 + rng.uniform(0.0, 0.5, s.n)) + 1e-6
    return f, g


def _row(suite, space_id, where, w) -> dict:
    where = "/".join(str(v) for v in where) if isinstance(where, tuple) else str(where)
    return {"suite": suite, "space_id": space_id, "where": where, "lhs": w.lhs, "rhs": w.rhs,
            "slack": w.rhs - w.lhs}


def _pipeline_rows(suite, space_id, rep) -> list:
    rows = []
    if not rep.precondition_ok:
        rows.append({"suite": suite, "space_id": space_id, "where": "precondition",
                     "lhs": float("nan"), "rhs": float("nan"), "slack": float("nan")})
    for chk in rep.checks:
        rows.extend(_row(suite, space_id, (chk.name, w.where), w) for w in chk.witnesses)
    return rows


def _arena(s, max_jumps: int) -> CurveFamily:
    return CurveFamily(enumerate_step_curves(s, max_jumps), s)


# ---------------------------------------------------------------- suites

def suite_uno(spaces, rng, max_jumps: int, p: float, tol: float, pairs: int = 2) -> tuple:
    rows, runs = [], []
    for sid, s in spaces:
        for _ in range(pairs):
            f, gh = hajlasz_pair(rng, s, p)
            rep = pipeline_uno(f, 2 * gh, p, s, tol)
            runs.append({"space_id": sid, "ok": rep.ok, "arena_size": rep.data["arena_size"]})
            rows.extend(_pipeline_rows("uno", sid, rep))
    return rows, {"runs": runs}


def suite_bounded18(spaces, rng, max_jumps: int, p: float, tol: float, pairs: int = 2) -> tuple:
    rows, runs = [], []
    for sid, s in spaces:
        arena = _arena(s, max_jumps)
        d = s.float_dist()
        ms = [float(np.max(d)), float(np.median(d[d > 0]))]
        for _ in range(pairs):
            f, g = hajlasz_pair(rng, s, p)
            rep = pipeline_bounded_lemma(f, g, s, arena, ms, tol)
            runs.append({"space_id": sid, "ok": rep.ok, "arena_size": len(arena),
                         "checked": sum(c.checked for c in rep.checks)})
            rows.extend(_pipeline_rows("bounded18", sid, rep))
    return rows, {"runs": runs}


def suite_seventysix(spaces, rng, max_jumps: int, p: float, tol: float, pairs: int = 2) -> tuple:
    rows, runs = [], []
    worst = 0.0
    for sid, s in spaces:
        arena = _arena(s, max_jumps)
        for _ in range(pairs):
            f, g = hajlasz_pair(rng, s, p)
            g[rng.integers(s.n)] = 2.0 ** rng.integers(6, 16)
            rep = pipeline_76(f, g, p, s, arena, tol)
            ratio = rep.data.get("max_ratio", 0.0)
            worst = max(worst, ratio)
            runs.append({"space_id": sid, "ok": rep.ok, "levels": rep.data["levels"],
                         "max_ratio": ratio})
            rows.extend(_pipeline_rows("seventysix", sid, rep))
    return rows, {"runs": runs, "max_observed_ratio": worst}


def suite_plans(spaces, rng, max_jumps: int, p: float, tol: float, pairs: int = 2) -> tuple:
    """Product plans over singleton balls versus the Hajlasz check with ``g/2``.

    The random ``g`` is a scaled copy of a Hajlasz gradient so that both checks
    usually find violations; a row is emitted whenever the violation sets differ.
    Dirac plans are compared with the single-curve check as well.
    """
    rows, runs = [], []
    for sid, s in spaces:
        d = s.float_dist()
        r = 0.25 * float(np.min(d[d > 0]))
        idx = [(x, y) for x in range(s.n) for y in range(x + 1, s.n)]
        plans = [product_plan(s, x, y, r) for x, y in idx]
        constants = [marginal_constant(pl, s) for pl in plans]
        for _ in range(pairs):
            f, gh = hajlasz_pair(rng, s, p)
            g = gh * rng.uniform(0.2, 1.2, s.n)
            via_plans = {idx[i] for i in plan_check(f, g, plans, tol).pairs()}
            via_hajlasz = hajlasz_check(f, g / 2, s, tol=tol).pairs()
            dirac = [TestPlan.dirac(pl.curves[0]) for pl in plans]
            via_dirac = plan_check(f, g, dirac, tol).pairs()
            via_curves = upper_s_check(f, g, [pl.curves[0] for pl in plans], tol).pairs()
            same = via_plans == via_hajlasz and via_dirac == via_curves
            runs.append({"space_id": sid, "ok": same, "violating_pairs": sorted(via_hajlasz),
                         "marginal_constants": constants})
            for pair in sorted(via_plans ^ via_hajlasz):
                rows.append({"suite": "plans", "space_id": sid, "where": f"{pair[0]}/{pair[1]}",
                             "lhs": float("nan"), "rhs": float("nan"), "slack": float("nan")})
            for i in sorted(via_dirac ^ via_curves):
                rows.append({"suite": "plans", "space_id": sid, "where": f"dirac/{i}",
                             "lhs": float("nan"), "rhs": float("nan"), "slack": float("nan")})
    return rows, {"runs": runs}


def suite_fuglede(spaces, rng, max_jumps: int, p: float, tol: float, levels: int = 6) -> tuple:
    """``f_n -> f`` in ``L^p``; along a fast subsequence the bad families are small.

    With ``||f_{n_k} - f||_p^p <= 2^(-k(p+1))`` the family of arena curves with
    ``int^S |f_{n_k} - f| >= 2^(-k)`` admits ``2^k |f_{n_k} - f|``, so its
    modulus is at most ``2^(-k)``.
    """
    rows, runs = [], []
    for sid, s in spaces:
        arena = _arena(s, max_jumps)
        f = rng.uniform(-1.0, 1.0, s.n)
        # sparse spikes keep the Chebyshev bound close to tight
        noise = rng.normal(size=(24 * levels, s.n)) * (rng.random((24 * levels, s.n)) < 0.4)
        seq = [f + 3.0 * noise[n] * 2.0 ** (-n / 8) for n in range(len(noise))]
        n_prev, picked = -1, []
        for k in range(1, levels + 1):
            n = next((n for n in range(n_prev + 1, len(seq))
                      if lp_norm(seq[n] - f, s, p) ** p <= 2.0 ** (-k * (p + 1))), None)
            if n is None:
                break
            picked.append((k, n))
            n_prev = n
        for k, n in picked:
            rho = np.abs(seq[n] - f)
            integrals = arena.rows @ rho
            members = np.flatnonzero(integrals >= 2.0 ** -k)
            fam = arena.subfamily(members)
            value = modulus(fam, p, s).value
            ok_adm, _ = admissible(2.0 ** k * rho, fam)
            bound = 2.0 ** -k
            runs.append({"space_id": sid, "k": k, "n_k": n, "family_size": len(fam),
                         "modulus": value, "bound": bound, "chebyshev_admissible": ok_adm})
            if value - bound > tol or not ok_adm:
                rows.append({"suite": "fuglede", "space_id": sid, "where": f"k={k}",
                             "lhs": value, "rhs": bound, "slack": bound - value})
    return rows, {"runs": runs}


_RUNNERS = {"uno": suite_uno, "bounded18": suite_bounded18, "seventysix": suite_seventysix,
            "plans": suite_plans, "fuglede": suite_fuglede}


def run_suite(name: str, seed: int = 0, spaces: int = 5, max_jumps: int = 2, p: float = 2.0,
              tol: Optional[float] = None, fixtures: bool = True) -> dict:
    """Run one suite; the report's ``violations`` list is empty iff it passed."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    tol = tolerance() if tol is None else tol
    pool = spaces_for(seed, spaces, fixtures)
    for sid, s in pool:
        bad = validate_space(s)
        if bad is not None:
            raise ValueError(f"{sid}: {bad}")
    # one independent stream per suite keeps suites reproducible in isolation
    rng = np.random.default_rng([seed, SUITES.index(name)])
    rows, data = _RUNNERS[name](pool, rng, max_jumps, p, tol)
    return {"suite": name, "anchor": ANCHORS[name], "ok": not rows, "seed": seed,
            "spaces": [sid for sid, _ in pool], "max_jumps": max_jumps, "p": p,
            "tolerance": tol, "violations": rows, **data}


def run(names, **kwargs) -> dict:
    reports = [run_suite(n, **kwargs) for n in names]
    return {"ok": all(r["ok"] for r in reports), "reports": reports}


CSV_COLUMNS = ("suite", "space_id", "curve_id/pair", "lhs", "rhs", "slack")


def csv_rows(result: dict) -> list:
    out = []
    for rep in result["reports"]:
        for r in rep["violations"]:
            out.append([r["suite"], r["space_id"], r["where"], r["lhs"], r["rhs"], r["slack"]])
    return out
