"""Lebesgue-Stieltjes integration along test curves.

Integrands are either function tables (one value per space point) or
*coordinate functionals*: callables mapping an ``(m, k)`` array of coordinates
to ``m`` values.  Polyline pieces need a coordinate functional.

Products use the measure-theoretic convention ``inf * 0 = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np

from .curve import (CurveError, Locus, Partition, TCCurve, _consecutive_distances, _coord,
                    evaluate, evaluate_left, left_adjusted_restrict, reverse, sample,
                    variation_function)
from .space import FiniteMetricMeasureSpace

Integrand = Union[np.ndarray, Sequence[float], Callable[[np.ndarray], np.ndarray]]

QUAD_TOL = 1e-10
_GL_ORDER = 10
_MAX_DEPTH = 40


@dataclass(frozen=True)
class CurveMeasure:
    """Atoms at jump times plus a piecewise-constant density (the speed)."""

    a: float
    b: float
    atoms: tuple  # (time, mass)
    density: tuple  # (t0, t1, speed)

    def measure(self, lo: float, hi: float):
        """Mass of the half-open interval ``(lo, hi]``."""
        total = sum(m for t, m in self.atoms if lo < t <= hi)
        for t0, t1, speed in self.density:
            overlap = min(hi, t1) - max(lo, t0)
            if overlap > 0:
                total += speed * overlap
        return total

    @property
    def total(self):
        return sum(m for _, m in self.atoms) + sum(v * (t1 - t0) for t0, t1, v in self.density)


def curve_measure(c: TCCurve) -> CurveMeasure:
    atoms = tuple((t, size) for t, _, _, size in c.jumps())
    density = tuple((t0, t1, length / (t1 - t0)) for t0, t1, _, _, length in c.segments()
                    if length > 0)
    return CurveMeasure(c.a, c.b, atoms, density)


# ---------------------------------------------------------------- integrands

def _values_at(f: Integrand, s: FiniteMetricMeasureSpace, loci: list) -> list:
    if callable(f):
        if not loci:
            return []
        pts = np.array([_coord(s, u) for u in loci])
        return [float(v) for v in np.asarray(f(pts), dtype=float)]
    out = []
    for u in loci:
        if isinstance(u, (int, np.integer)):
            out.append(f[u])
        else:
            out.append(f[_lookup_point(s, u)])
    return out


def _lookup_point(s: FiniteMetricMeasureSpace, u: tuple) -> int:
    if s.coords is not None:
        hits = np.flatnonzero(np.all(s.coords == np.asarray(u), axis=1))
        if hits.size:
            return int(hits[0])
    raise CurveError(f"function table cannot be evaluated at non-point locus {u}")


def _times(value, mass):
    """``value * mass`` with ``inf * 0 = 0``."""
    if mass == 0:
        return 0
    return value * mass


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _segment_integral(f: Integrand, p0: np.ndarray, p1: np.ndarray, length: float,
                      tol: float = QUAD_TOL) -> float:
    """Integral of ``f`` over the segment ``[p0, p1]`` against arc length."""
    if length == 0:
        return 0.0
    if not callable(f):
        raise CurveError("polyline integration needs a coordinate functional, not a table")
    nodes, weights = _gauss_legendre(_GL_ORDER)

    def rule(lo: float, hi: float) -> float:
        u = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        vals = np.asarray(f(p0[None, :] + u[:, None] * (p1 - p0)[None, :]), dtype=float)
        return 0.5 * (hi - lo) * float(weights @ vals) * length

    def adapt(lo: float, hi: float, whole: float, eps: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        if not np.isfinite(left + right):
            return float("inf")
        if abs(left + right - whole) <= eps or depth >= _MAX_DEPTH:
            return left + right
        return adapt(lo, mid, left, eps / 2, depth + 1) + adapt(mid, hi, right, eps / 2, depth + 1)

    whole = rule(0.0, 1.0)
    if not np.isfinite(whole):
        return float("inf")
    return adapt(0.0, 1.0, whole, tol, 0)


# ---------------------------------------------------------------- integrals

def integrate(c: TCCurve, f: Integrand):
    """``int_c f``: the integral of ``f(c(t))`` against the curve measure.

    The atomic part is exact (in rational arithmetic on exact spaces); polyline
    segments use adaptive Gauss-Legendre quadrature to absolute tolerance 1e-10.
    """
    js = c.jumps()
    vals = _values_at(f, c.space, [right for _, _, right, _ in js])
    total = sum((_times(v, size) for v, (_, _, _, size) in zip(vals, js)),
                Fraction(0) if c.space.exact else 0.0)
    for _, _, p0, p1, length in c.segments():
        total = total + _segment_integral(f, p0, p1, length)
    return total


def sym_integrate(c: TCCurve, f: Integrand):
    """Average of the integrals of ``f`` along the curve and along its reversal."""
    return (integrate(c, f) + integrate(reverse(c), f)) / 2


@dataclass(frozen=True)
class PointMeasure:
    """A measure on the space: point masses plus (for polylines) length measure.

    ``extra_atoms`` holds atoms at coordinate loci that are not space points;
    ``segments`` holds ``(p0, p1, length)`` carrying one-dimensional length
    measure.  For step curves only ``masses`` is populated.
    """

    masses: np.ndarray
    extra_atoms: tuple = ()
    segments: tuple = ()

    @property
    def is_atomic(self) -> bool:
        return not self.extra_atoms and not self.segments

    @property
    def total(self):
        return (sum(self.masses.tolist()) + sum(m for _, m in self.extra_atoms)
                + sum(seg[2] for seg in self.segments))

    def integrate(self, g: Integrand, s: FiniteMetricMeasureSpace):
        vals = _values_at(g, s, list(range(s.n)))
        total = sum(_times(v, m) for v, m in zip(vals, self.masses.tolist()))
        if self.extra_atoms:
            xv = _values_at(g, s, [u for u, _ in self.extra_atoms])
            total += sum(_times(v, m) for v, (_, m) in zip(xv, self.extra_atoms))
        for p0, p1, length in self.segments:
            total += _segment_integral(g, p0, p1, length)
        return total


def sym_measure(c: TCCurve) -> PointMeasure:
    """The symmetrized pushforward of the curve measure onto the space.

    Each jump of size ``phi`` puts ``phi/2`` on the left limit and ``phi/2`` on
    the landing point; polyline segments contribute length measure.
    """
    s = c.space
    zero = Fraction(0) if s.exact else 0.0
    masses = np.array([zero] * s.n, dtype=object if s.exact else float)
    extra: dict = {}
    for _, left, right, size in c.jumps():
        half = size / 2
        for u in (left, right):
            idx = u if isinstance(u, (int, np.integer)) else _point_or_none(s, u)
            if idx is None:
                extra[u] = extra.get(u, 0.0) + half
            else:
                masses[idx] += half
    segs = tuple((p0, p1, length) for _, _, p0, p1, length in c.segments() if length > 0)
    return PointMeasure(masses, tuple(sorted(extra.items())), segs)


def _point_or_none(s: FiniteMetricMeasureSpace, u: tuple):
    try:
        return _lookup_point(s, u)
    except CurveError:
        return None


def step_row(c: TCCurve) -> np.ndarray:
    """Float vector of ``sym_measure`` masses for a step curve (a modulus constraint row)."""
    if not c.is_step:
        raise CurveError("constraint rows exist only for step curves")
    return sym_measure(c).masses.astype(float)


def decompose_at(c: TCCurve, t: float, f: Integrand) -> tuple:
    """Split the symmetrized integral at an interior time ``t``.

    Returns ``(left, bridge, right)``: the symmetrized integral over the
    left-adjusted restriction to ``[a, t]``, the jump term
    ``(f(c(t)) + f(c(t-))) / 2 * (V(t) - V(t-))`` and the symmetrized integral
    over ``[t, b]``.  The three add up to the whole.
    """
    if not c.a < t < c.b:
        raise CurveError(f"decomposition time {t} must lie strictly inside [{c.a}, {c.b}]")
    left = sym_integrate(left_adjusted_restrict(c, c.a, t), f)
    right = sym_integrate(left_adjusted_restrict(c, t, c.b), f)
    vf = variation_function(c)
    size = vf(t) - vf.left(t)
    fr, fl = _values_at(f, c.space, [evaluate(c, t), evaluate_left(c, t)])
    bridge = _times((fr + fl) / 2, size)
    return left, bridge, right


def riemann_approx(c: TCCurve, f: Integrand, partition: Partition) -> float:
    """``sum_i d(c(t_i), c(t_{i-1})) f(c(t_i))`` over the partition."""
    ts = np.asarray(partition.times, dtype=float)
    if ts[0] != c.a or ts[-1] != c.b:
        raise CurveError("partition does not span the curve's domain")
    steps = _consecutive_distances(c, ts)
    vals = sample(c, ts[1:])
    if callable(f):
        fv = np.asarray(f(vals if vals.ndim == 2 else c.space.coords[vals]), dtype=float)
    elif vals.ndim == 1:
        fv = np.asarray(f, dtype=float)[vals]
    else:
        raise CurveError("polyline Riemann sums need a coordinate functional")
    moving = steps != 0
    return float(np.sum(steps[moving].astype(float) * fv[moving]))


def tail_values(c: TCCurve, f: Integrand, t: float, side: str, r_seq: Sequence[float]) -> list:
    """The vanishing-tail quantities along ``r_n -> t``.

    ``side="left"``: symmetrized integral over the left-adjusted restriction
    to ``[r_n, t]``.  ``side="right"``: the same over ``[t, r_n]`` plus the
    jump term at ``r_n``.
    """
    rs = [float(r) for r in r_seq]
    if side == "left":
        ok = c.a <= min(rs) and all(r < t for r in rs) and all(x < y for x, y in zip(rs, rs[1:]))
    elif side == "right":
        ok = max(rs) <= c.b and all(r > t for r in rs) and all(x > y for x, y in zip(rs, rs[1:]))
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not rs or not ok:
        raise CurveError("tail sequence must be strictly monotone toward t from the given side")
    out = []
    for r in rs:
        if side == "left":
            out.append(float(sym_integrate(left_adjusted_restrict(c, r, t), f)))
        else:
            body = sym_integrate(left_adjusted_restrict(c, t, r), f)
            size = 0.0 if r == c.b else float(
                variation_function(c)(r) - variation_function(c).left(r))
            fr, fl = _values_at(f, c.space, [evaluate(c, r), evaluate_left(c, r)])
            out.append(float(body) + float(_times((fr + fl) / 2, size)))
    return out


def tail_vanishes(c: TCCurve, f: Integrand, t: float, side: str, r_seq: Sequence[float],
                  tol: float = 1e-9) -> bool:
    """True iff the tail quantity drops below ``tol`` and stays there along ``r_seq``."""
    vals = tail_values(c, f, t, side, r_seq)
    below = [abs(v) < tol for v in vals]
    if not below[-1]:
        return False
    first = below.index(True)
    return all(below[first:])
