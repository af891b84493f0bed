"""Discrete p-modulus of finite families of step curves and of finite test plans."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np

from .curve import CurveError, TCCurve, evaluate, step_curve, two_point_curve, variation
from .solvers import REL_TOL, minimize_weighted_power
from .space import FiniteMetricMeasureSpace
from .stieltjes import step_row

ADMISSIBLE_TOL = 1e-12
NULL_TOL = 1e-10


class CurveFamily:
    """A finite list of nontrivial step curves with cached constraint rows.

    Row ``i`` holds the symmetrized pushforward masses of curve ``i``, so
    ``rows @ rho`` is the vector of symmetrized integrals of ``rho``.
    """

    def __init__(self, curves: Sequence[TCCurve], space: Optional[FiniteMetricMeasureSpace] = None):
        self.curves = list(curves)
        if space is None and self.curves:
            space = self.curves[0].space
        self.space = space
        for i, c in enumerate(self.curves):
            if c.space is not space:
                raise CurveError(f"curve {i} lives on a different space")
            if not c.is_step:
                raise CurveError(f"curve {i} has polyline pieces; modulus needs step curves")
            if not variation(c) > 0:
                raise CurveError(f"curve {i} has zero variation")
        n = 0 if space is None else space.n
        self.rows = np.array([step_row(c) for c in self.curves]).reshape(len(self.curves), n)

    def __len__(self) -> int:
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def subfamily(self, indices) -> "CurveFamily":
        sub = CurveFamily.__new__(CurveFamily)
        idx = list(indices)
        sub.curves = [self.curves[i] for i in idx]
        sub.space = self.space
        sub.rows = self.rows[idx].reshape(len(idx), self.rows.shape[1])
        return sub

    def union(self, other: "CurveFamily") -> "CurveFamily":
        merged = CurveFamily.__new__(CurveFamily)
        merged.curves = self.curves + other.curves
        merged.space = self.space if self.space is not None else other.space
        merged.rows = np.vstack([self.rows, other.rows]) if len(other) else self.rows
        if not len(self):
            merged.rows = other.rows
        return merged


@dataclass
class ModulusResult:
    value: float
    density: np.ndarray
    slacks: np.ndarray
    method: str = ""
    unique: bool = True
    converged: bool = True
    gap: float = 0.0

    def to_json(self) -> dict:
        return {"value": self.value, "density": self.density.tolist(),
                "slacks": self.slacks.tolist(), "method": self.method,
                "unique": self.unique, "converged": self.converged, "gap": self.gap}


@dataclass
class TestPlan:
    """A finite weighted family of curves on ``[0, 1]`` (a discrete test plan)."""

    curves: list
    weights: list
    space: FiniteMetricMeasureSpace = field(repr=False, default=None)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if len(self.curves) != len(self.weights):
            raise ValueError("curves and weights must have equal length")
        if any(not w > 0 for w in self.weights):
            raise ValueError("test plan weights must be positive")
        if self.space is None and self.curves:
            self.space = self.curves[0].space
        for c in self.curves:
            if c.domain != (0.0, 1.0):
                raise CurveError("test plan curves must live on [0, 1]")

    @classmethod
    def dirac(cls, c: TCCurve) -> "TestPlan":
        return cls([c], [1.0], c.space)

    def normalized(self) -> "TestPlan":
        total = float(sum(self.weights))
        return TestPlan(self.curves, [w / total for w in self.weights], self.space)

    def row(self) -> np.ndarray:
        """``sum_i w_i * row(curve_i)``."""
        out = np.zeros(self.space.n)
        for c, w in zip(self.curves, self.weights):
            out = out + w * step_row(c)
        return out

    def mean_variation(self) -> float:
        return float(sum(w * float(variation(c)) for c, w in zip(self.curves, self.weights)))


def product_plan(s: FiniteMetricMeasureSpace, x: int, y: int, r: float) -> TestPlan:
    """Normalized product of the ball measures around ``x`` and ``y`` carried by
    two-point curves ``w -> z``; requires ``r < d(x, y) / 2`` so the balls are disjoint."""
    d = float(s.dist[x, y])
    if not 0 <= r < d / 2:
        raise ValueError(f"radius {r} must lie in [0, d(x,y)/2) = [0, {d / 2})")
    m = s.float_weight()
    bx, by = s.ball(x, r), s.ball(y, r)
    mx, my = m[bx].sum(), m[by].sum()
    curves, weights = [], []
    for w, z in product(bx, by):
        curves.append(two_point_curve(s, int(w), int(z)))
        weights.append(m[w] * m[z] / (mx * my))
    return TestPlan(curves, weights, s)


# ---------------------------------------------------------------- operations

def admissible(rho, fam: CurveFamily) -> tuple:
    """Whether every curve has symmetrized integral of ``rho`` at least 1.

    Returns ``(ok, worst_slack)``; the worst slack of an empty family is ``inf``.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be nonnegative")
    if not len(fam):
        return True, float("inf")
    slack = _row_integrals(fam.rows, rho) - 1.0
    worst = float(slack.min())
    return worst >= -ADMISSIBLE_TOL, worst


def _row_integrals(rows: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``rows @ g`` with ``inf * 0 = 0``."""
    g = np.asarray(g, dtype=float)
    if not np.isinf(g).any():
        return rows @ g
    finite = np.where(np.isinf(g), 0.0, g)
    out = rows @ finite
    hits = (rows[:, np.isinf(g)] > 0).any(axis=1)
    out[hits] = np.inf
    return out


def _solve_rows(rows: np.ndarray, p: float, s: FiniteMetricMeasureSpace,
                method: str = "auto") -> ModulusResult:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    m = s.float_weight()
    if rows.shape[0] == 0:
        return ModulusResult(0.0, np.zeros(s.n), np.zeros(0), "trivial")
    sol = minimize_weighted_power(rows, np.ones(rows.shape[0]), m, p, method=method)
    slacks = _row_integrals(rows, sol.x) - 1.0
    return ModulusResult(sol.value, sol.x, slacks, sol.method, sol.unique, sol.converged, sol.gap)


def modulus(fam: CurveFamily, p: float, s: Optional[FiniteMetricMeasureSpace] = None,
            method: str = "auto") -> ModulusResult:
    """Minimize ``sum_x m(x) rho(x)^p`` over densities admissible for ``fam``.

    ``p = 2`` uses a primal active-set method, ``p = 1`` a simplex solve with
    lexicographic tie-breaking (``unique`` is False when the optimal face is
    not a single point), other ``p`` dual ascent with a Newton polish.
    """
    s = s if s is not None else fam.space
    if s is None:
        return ModulusResult(0.0, np.zeros(0), np.zeros(0), "trivial")
    return _solve_rows(fam.rows, p, s, method)


def is_null_family(fam: CurveFamily, p: float, s: Optional[FiniteMetricMeasureSpace] = None) -> tuple:
    """Return ``(is_null, witness)``.

    With positive weights only the empty family is null (witness 0).  Points
    of zero weight (unchecked spaces) carry the witness ``inf``, which has zero
    ``L^p`` norm and infinite symmetrized integral along every member touching
    them.  When the modulus is merely below ``NULL_TOL`` without such points,
    the optimal density itself is returned as an approximate witness.
    """
    s = s if s is not None else fam.space
    n = 0 if s is None else s.n
    if not len(fam):
        return True, np.zeros(n)
    res = modulus(fam, p, s)
    if res.value >= NULL_TOL:
        return False, None
    witness = np.where(s.float_weight() == 0, np.inf, 0.0)
    if np.all(np.isinf(_row_integrals(fam.rows, witness))):
        return True, witness
    return True, res.density


def generalized_modulus(plans: Sequence[TestPlan], p: float,
                        s: Optional[FiniteMetricMeasureSpace] = None,
                        method: str = "auto") -> ModulusResult:
    """Modulus with one constraint row ``sum_i w_i * row(curve_i)`` per plan."""
    if s is None:
        s = plans[0].space if plans else None
    if s is None:
        return ModulusResult(0.0, np.zeros(0), np.zeros(0), "trivial")
    rows = np.array([pl.row() for pl in plans]).reshape(len(plans), s.n)
    return _solve_rows(rows, p, s, method)


def marginal_constant(plan: TestPlan, s: Optional[FiniteMetricMeasureSpace] = None) -> float:
    """Smallest ``C`` with ``(e_t)_# plan <= C m`` for every ``t`` in ``[0, 1]``.

    Marginals only change at piece boundaries, so the maximum is taken over
    the union of boundary times together with ``0`` and ``1``.
    """
    s = s if s is not None else plan.space
    if not plan.curves:
        return 0.0
    times = sorted({0.0, 1.0} | {p.start for c in plan.curves for p in c.pieces})
    m = s.float_weight()
    best = 0.0
    for t in times:
        marg = np.zeros(s.n)
        for c, w in zip(plan.curves, plan.weights):
            marg[evaluate(c, t)] += w
        best = max(best, float(np.max(marg / m)))
    return best


# ---------------------------------------------------------------- enumeration

def dyadic_times(depth: int) -> list:
    return [k / 2 ** depth for k in range(1, 2 ** depth)]


def enumerate_step_curves(s: FiniteMetricMeasureSpace, max_jumps: int,
                          depth: Optional[int] = None, include_constant: bool = False) -> list:
    """All step curves on ``[0, 1]`` with at most ``max_jumps`` jumps.

    Jump times range over the interior dyadic grid ``k / 2**depth`` (``depth``
    defaults to ``max_jumps``); consecutive values differ, so every listed
    curve is canonical and those with a jump are nontrivial.
    """
    if max_jumps < 0:
        raise ValueError("max_jumps must be >= 0")
    grid = dyadic_times(max_jumps if depth is None else depth)
    out = []
    if include_constant:
        out.extend(step_curve(s, [x], [0.0]) for x in range(s.n))
    for j in range(1, max_jumps + 1):
        for jt in combinations(grid, j):
            for seq in _sequences(s.n, j + 1):
                out.append(step_curve(s, seq, (0.0,) + jt))
    return out


def _sequences(n: int, length: int):
    """Point sequences of the given length whose consecutive entries differ."""
    if length == 1:
        yield from ([x] for x in range(n))
        return
    for head in _sequences(n, length - 1):
        for x in range(n):
            if x != head[-1]:
                yield head + [x]


def two_point_family(s: FiniteMetricMeasureSpace) -> CurveFamily:
    """The canonical two-point curves ``x -> y`` for all ordered pairs ``x != y``."""
    return CurveFamily([two_point_curve(s, x, y) for x in range(s.n) for y in range(s.n)
                        if x != y], s)
