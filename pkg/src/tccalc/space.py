"""Finite metric measure spaces and function tables on them."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence

import numpy as np

REL_TOL = 1e-12


class SpaceError(ValueError):
    """Raised when space data cannot describe a finite metric measure space."""


def _is_exact(value) -> bool:
    return isinstance(value, Rational) and not isinstance(value, bool)


def _as_matrix(rows, exact: bool) -> np.ndarray:
    if exact:
        return np.array([[Fraction(v) for v in row] for row in rows], dtype=object)
    return np.array(rows, dtype=float)


@dataclass(frozen=True, eq=False)
class FiniteMetricMeasureSpace:
    """Points ``0..n-1`` with a distance matrix and positive point masses.

    When every distance and weight is an ``int`` or ``Fraction`` the matrices are
    kept as object arrays of ``Fraction`` and all step-curve arithmetic on the
    space is exact.
    """

    dist: np.ndarray
    weight: np.ndarray
    coords: Optional[np.ndarray] = None

    @classmethod
    def from_data(cls, dist, weight, coords=None) -> "FiniteMetricMeasureSpace":
        flat = [v for row in dist for v in row] + list(weight)
        exact = bool(flat) and all(_is_exact(v) for v in flat)
        d = _as_matrix(dist, exact)
        w = np.array([Fraction(v) for v in weight], dtype=object) if exact \
            else np.array(weight, dtype=float)
        c = None if coords is None else np.array(coords, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or w.shape != (d.shape[0],):
            raise SpaceError(f"shape mismatch: dist {d.shape}, weight {w.shape}")
        if c is not None and (c.ndim != 2 or c.shape[0] != d.shape[0]):
            raise SpaceError(f"coords must have {d.shape[0]} rows, got shape {c.shape}")
        return cls(d, w, c)

    @classmethod
    def from_points(cls, coords, weight) -> "FiniteMetricMeasureSpace":
        """Euclidean space on the rows of ``coords``."""
        c = np.atleast_2d(np.asarray(coords, dtype=float))
        diff = c[:, None, :] - c[None, :, :]
        return cls.from_data(np.sqrt((diff ** 2).sum(-1)), weight, c)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def exact(self) -> bool:
        return self.dist.dtype == object

    @property
    def embedded(self) -> bool:
        return self.coords is not None

    def float_dist(self) -> np.ndarray:
        return self.dist.astype(float)

    def float_weight(self) -> np.ndarray:
        return self.weight.astype(float)

    def ball(self, x: int, r: float) -> np.ndarray:
        """Indices of the closed ball of radius ``r`` around ``x``."""
        return np.flatnonzero(self.float_dist()[x] <= r)

    def to_json(self) -> dict:
        def conv(v):
            return str(v) if isinstance(v, Fraction) and v.denominator != 1 else (
                int(v) if isinstance(v, Fraction) else float(v))
        out = {"n": self.n,
               "dist": [[conv(v) for v in row] for row in self.dist],
               "weight": [conv(v) for v in self.weight]}
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        return out


def validate_space(s: FiniteMetricMeasureSpace) -> Optional[str]:
    """Return a description of the first violated invariant, or ``None``.

    Checks run in the order: symmetry, zero diagonal, positivity off the
    diagonal, positive weights, triangle inequality, embedding consistency.
    Exact spaces are checked exactly; float spaces with relative tolerance 1e-12.
    """
    d, w, n = s.dist, s.weight, s.n
    tol = 0 if s.exact else REL_TOL
    scale = 0 if s.exact or n == 0 else float(np.max(np.abs(d.astype(float))))
    slack = tol * scale

    for i in range(n):
        for j in range(i + 1, n):
            if abs(d[i, j] - d[j, i]) > slack:
                return f"asymmetry at ({i},{j}): {d[i, j]} != {d[j, i]}"
    for i in range(n):
        if d[i, i] != 0:
            return f"nonzero diagonal at ({i},{i}): {d[i, i]}"
    for i in range(n):
        for j in range(n):
            if i != j and not d[i, j] > 0:
                return f"non-positive distance at ({i},{j}): {d[i, j]}"
    for i in range(n):
        if not w[i] > 0:
            return f"non-positive weight at {i}: {w[i]}"
    if s.exact:
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if d[i, k] > d[i, j] + d[j, k]:
                        return f"triangle inequality fails at ({i},{j},{k})"
    else:
        df = d.astype(float)
        # excess[i, j, k] = d[i,k] - d[i,j] - d[j,k]
        excess = df[:, None, :] - (df[:, :, None] + df[None, :, :])
        bad = np.argwhere(excess > slack)
        if bad.size:
            i, j, k = bad[0]
            return f"triangle inequality fails at ({i},{j},{k})"
    if s.coords is not None:
        c = s.coords
        eu = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))
        df = d.astype(float)
        bad = np.argwhere(np.abs(eu - df) > REL_TOL * np.maximum(1.0, np.abs(df)))
        if bad.size:
            i, j = bad[0]
            return f"coords disagree with dist at ({i},{j})"
    return None


def as_table(f, s: FiniteMetricMeasureSpace) -> np.ndarray:
    """Coerce a function table, accepting the string ``"inf"`` for +inf."""
    vals = [_parse_extended(v) for v in f]
    if len(vals) != s.n:
        raise ValueError(f"function table has length {len(vals)}, space has {s.n} points")
    if all(_is_exact(v) for v in vals):
        return np.array([Fraction(v) for v in vals], dtype=object)
    return np.array(vals, dtype=float)


def _parse_extended(v):
    if isinstance(v, str):
        t = v.strip().lower()
        if t in ("inf", "+inf", "infinity"):
            return float("inf")
        if t in ("-inf", "-infinity"):
            return float("-inf")
        return Fraction(t)
    return v


def lp_norm(f, s: FiniteMetricMeasureSpace, p: float) -> float:
    """``(sum_x m(x) |f(x)|^p)^(1/p)``; infinite entries give ``inf``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    vals = np.abs(np.asarray(f, dtype=float))
    if np.any(np.isinf(vals)):
        return float("inf")
    return float(np.sum(s.float_weight() * vals ** p) ** (1.0 / p))


def random_space(rng: np.random.Generator, k: int, dim: int = 2,
                 weight_range: Sequence[float] = (0.5, 2.0)) -> FiniteMetricMeasureSpace:
    """``k`` uniform points in the unit square (or cube) with Euclidean distances.

    Weights are uniform on ``weight_range``.  Redraws in the (measure zero)
    event of coincident points.
    """
    while True:
        pts = rng.uniform(0.0, 1.0, size=(k, dim))
        w = rng.uniform(*weight_range, size=k)
        s = FiniteMetricMeasureSpace.from_points(pts, w)
        if validate_space(s) is None:
            return s
