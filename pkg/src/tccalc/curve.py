"""Right-continuous curves of bounded variation built from finitely many pieces.

A curve on ``[a, b]`` is a list of pieces.  A :class:`Step` holds a point index
from ``start`` until the next piece begins; a :class:`Polyline` is a continuous
piecewise-linear path through coordinate vertices (embedded spaces only).
Every piece is closed on the left, so the curve is right-continuous, and the
last piece extends up to and including ``b``.

Curve values ("loci") are either ``int`` point indices or tuples of floats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .space import FiniteMetricMeasureSpace

Locus = Union[int, tuple]


class CurveError(ValueError):
    """Raised for malformed curves or out-of-domain queries."""


@dataclass(frozen=True)
class Step:
    start: float
    point: int


@dataclass(frozen=True)
class Polyline:
    times: tuple
    vertices: tuple

    @property
    def start(self) -> float:
        return self.times[0]

    @property
    def end(self) -> float:
        return self.times[-1]

    def value(self, t: float) -> tuple:
        v = np.asarray(self.vertices, dtype=float)
        return tuple(float(np.interp(t, self.times, v[:, j])) for j in range(v.shape[1]))

    def cut(self, lo: float, hi: float) -> "Polyline":
        """The same path restricted to ``[lo, hi]``."""
        times = [lo] + [t for t in self.times if lo < t < hi] + [hi]
        verts = [self.vertices[self.times.index(t)] if t in self.times else self.value(t)
                 for t in times]
        return Polyline(tuple(times), tuple(tuple(map(float, v)) for v in verts))


Piece = Union[Step, Polyline]


@dataclass(frozen=True)
class Partition:
    """Strictly increasing times ``t_0 < ... < t_n``."""

    times: tuple

    def __post_init__(self):
        ts = self.times
        if len(ts) < 2 or any(not ts[i] < ts[i + 1] for i in range(len(ts) - 1)):
            raise CurveError("partition times must be strictly increasing with >= 2 entries")

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.times)))

    def refine(self, other: "Partition") -> "Partition":
        return Partition(tuple(sorted(set(self.times) | set(other.times))))

    @classmethod
    def uniform(cls, a: float, b: float, k: int) -> "Partition":
        """``k`` equal cells; endpoints pinned exactly."""
        ts = list(np.linspace(a, b, k + 1))
        ts[0], ts[-1] = a, b
        return cls(tuple(float(t) for t in ts))


def distance(s: FiniteMetricMeasureSpace, u: Locus, v: Locus):
    if isinstance(u, (int, np.integer)) and isinstance(v, (int, np.integer)):
        return s.dist[u, v]
    return float(np.linalg.norm(_coord(s, u) - _coord(s, v)))


def _coord(s: FiniteMetricMeasureSpace, u: Locus) -> np.ndarray:
    if isinstance(u, (int, np.integer)):
        if s.coords is None:
            raise CurveError("coordinate access on a space without embedding")
        return s.coords[u]
    return np.asarray(u, dtype=float)


def _same(u: Locus, v: Locus) -> bool:
    return type(u) is type(v) and u == v


@dataclass(frozen=True)
class TCCurve:
    """A test curve: right-continuous, left limits everywhere, left-continuous at ``b``.

    Build with :func:`make_curve` (or :func:`step_curve`), which validates and
    canonicalizes the piece list; two canonical curves are equal as functions
    exactly when their fields are equal.
    """

    space: FiniteMetricMeasureSpace = field(repr=False)
    a: float
    b: float
    pieces: tuple

    @property
    def domain(self) -> tuple:
        return (self.a, self.b)

    def piece_end(self, i: int) -> float:
        return self.pieces[i + 1].start if i + 1 < len(self.pieces) else self.b

    @property
    def is_step(self) -> bool:
        return all(isinstance(p, Step) for p in self.pieces)

    @property
    def is_continuous(self) -> bool:
        return not self.jumps()

    def jumps(self) -> list:
        """Discontinuities as ``(time, left_limit, value, size)`` sorted by time."""
        out = []
        for i in range(1, len(self.pieces)):
            left = _end_value(self.pieces[i - 1])
            right = _start_value(self.pieces[i])
            if not _same(left, right):
                size = distance(self.space, left, right)
                if size > 0:
                    out.append((self.pieces[i].start, left, right, size))
        return out

    def segments(self) -> list:
        """Linear segments of polyline pieces as ``(t0, t1, p0, p1, length)``."""
        out = []
        for p in self.pieces:
            if isinstance(p, Polyline):
                for k in range(len(p.times) - 1):
                    p0 = np.asarray(p.vertices[k], dtype=float)
                    p1 = np.asarray(p.vertices[k + 1], dtype=float)
                    out.append((p.times[k], p.times[k + 1], p0, p1,
                                float(np.linalg.norm(p1 - p0))))
        return out

    def points(self) -> list:
        """Visited point indices, in order, for a step curve."""
        if not self.is_step:
            raise CurveError("point sequence requested for a curve with polyline pieces")
        return [p.point for p in self.pieces]


def _start_value(p: Piece) -> Locus:
    return p.point if isinstance(p, Step) else tuple(p.vertices[0])


def _end_value(p: Piece) -> Locus:
    return p.point if isinstance(p, Step) else tuple(p.vertices[-1])


def make_curve(space: FiniteMetricMeasureSpace, domain: Sequence[float],
               pieces: Sequence[Piece]) -> TCCurve:
    """Validate a piece list and return the canonical curve."""
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise CurveError(f"degenerate domain [{a}, {b}]")
    if not pieces:
        raise CurveError("a curve needs at least one piece")
    norm = []
    for p in pieces:
        if isinstance(p, Step):
            if not 0 <= int(p.point) < space.n:
                raise CurveError(f"point index {p.point} outside space of size {space.n}")
            norm.append(Step(float(p.start), int(p.point)))
        elif isinstance(p, Polyline):
            if space.coords is None:
                raise CurveError("polyline pieces need a space with coordinates")
            times = tuple(float(t) for t in p.times)
            verts = tuple(tuple(float(x) for x in v) for v in p.vertices)
            if len(times) < 2 or len(times) != len(verts):
                raise CurveError("polyline needs >= 2 vertices with one time each")
            if any(not times[k] < times[k + 1] for k in range(len(times) - 1)):
                raise CurveError("polyline times must be strictly increasing")
            if any(len(v) != space.coords.shape[1] for v in verts):
                raise CurveError("polyline vertex dimension does not match the embedding")
            norm.append(Polyline(times, verts))
        else:
            raise CurveError(f"unknown piece {p!r}")
    if norm[0].start != a:
        raise CurveError(f"first piece starts at {norm[0].start}, domain starts at {a}")
    for i in range(len(norm)):
        end = norm[i + 1].start if i + 1 < len(norm) else b
        if not norm[i].start < end:
            raise CurveError("piece starts must be strictly increasing and below b")
        if isinstance(norm[i], Polyline) and norm[i].end != end:
            raise CurveError(f"polyline ending at {norm[i].end} must end at {end}")
    return TCCurve(space, a, b, tuple(_canonical(norm)))


def _canonical(pieces: list) -> list:
    out: list = []
    for p in pieces:
        if out and isinstance(p, Step) and isinstance(out[-1], Step) and out[-1].point == p.point:
            continue
        if out and isinstance(p, Polyline) and isinstance(out[-1], Polyline) \
                and out[-1].vertices[-1] == p.vertices[0]:
            q = out.pop()
            p = Polyline(q.times + p.times[1:], q.vertices + p.vertices[1:])
        out.append(p)
    return out


def step_curve(space: FiniteMetricMeasureSpace, points: Sequence[int],
               times: Sequence[float], domain: Sequence[float] = (0.0, 1.0)) -> TCCurve:
    """Step curve visiting ``points[i]`` from ``times[i]`` on; ``times[0]`` must be ``a``."""
    if len(points) != len(times):
        raise CurveError("points and times must have equal length")
    return make_curve(space, domain, [Step(t, p) for t, p in zip(times, points)])


def two_point_curve(space: FiniteMetricMeasureSpace, x: int, y: int,
                    domain: Sequence[float] = (0.0, 1.0)) -> TCCurve:
    """``x`` on ``[a, (a+b)/2)`` and ``y`` on ``[(a+b)/2, b]``."""
    a, b = domain
    return step_curve(space, [x, y], [a, (a + b) / 2], domain)


def polyline_curve(space: FiniteMetricMeasureSpace, vertices, times=None,
                   domain: Sequence[float] = (0.0, 1.0)) -> TCCurve:
    """Continuous polyline; vertex times default to an even split of the domain."""
    a, b = float(domain[0]), float(domain[1])
    if times is None:
        times = list(np.linspace(a, b, len(vertices)))
    times = [float(t) for t in times]
    times[0], times[-1] = a, b
    return make_curve(space, (a, b), [Polyline(tuple(times), tuple(map(tuple, vertices)))])


# ---------------------------------------------------------------- evaluation

def _piece_index(c: TCCurve, t: float) -> int:
    if not c.a <= t <= c.b:
        raise CurveError(f"time {t} outside [{c.a}, {c.b}]")
    starts = [p.start for p in c.pieces]
    return int(np.searchsorted(starts, t, side="right")) - 1


def evaluate(c: TCCurve, t: float) -> Locus:
    """Value ``c(t)`` (right-continuous)."""
    p = c.pieces[_piece_index(c, t)]
    return p.point if isinstance(p, Step) else p.value(t)


def evaluate_left(c: TCCurve, t: float) -> Locus:
    """Left limit ``c(t-)`` for ``t`` in ``(a, b]``."""
    if not c.a < t <= c.b:
        raise CurveError(f"left limit needs t in ({c.a}, {c.b}], got {t}")
    i = _piece_index(c, t)
    p = c.pieces[i]
    if p.start == t:
        return _end_value(c.pieces[i - 1])
    return p.point if isinstance(p, Step) else p.value(t)


def sample(c: TCCurve, times) -> np.ndarray:
    """Vectorized values at many times.

    Returns point indices for step curves and an ``(m, k)`` coordinate array
    otherwise.
    """
    ts = np.asarray(times, dtype=float)
    if np.any(ts < c.a) or np.any(ts > c.b):
        raise CurveError("sample times outside the domain")
    starts = np.array([p.start for p in c.pieces])
    idx = np.searchsorted(starts, ts, side="right") - 1
    if c.is_step:
        pts = np.array([p.point for p in c.pieces])
        return pts[idx]
    out = np.empty((ts.size, c.space.coords.shape[1]))
    for i, p in enumerate(c.pieces):
        mask = idx == i
        if not mask.any():
            continue
        if isinstance(p, Step):
            out[mask] = c.space.coords[p.point]
        else:
            v = np.asarray(p.vertices, dtype=float)
            for j in range(v.shape[1]):
                out[mask, j] = np.interp(ts[mask], p.times, v[:, j])
    return out


def _consecutive_distances(c: TCCurve, times) -> np.ndarray:
    vals = sample(c, times)
    if vals.ndim == 1:
        return c.space.dist[vals[:-1], vals[1:]]
    return np.sqrt(((vals[1:] - vals[:-1]) ** 2).sum(-1))


# ---------------------------------------------------------------- variation

def delta_variation(c: TCCurve, partition: Partition):
    """Sum of distances between the curve's values at consecutive partition times."""
    ts = partition.times
    if ts[0] != c.a or ts[-1] != c.b:
        raise CurveError("partition does not span the curve's domain")
    return sum(_consecutive_distances(c, ts).tolist())


def variation(c: TCCurve):
    """Total variation: jump sizes plus polyline lengths (exact for this curve class)."""
    total = sum(j[3] for j in c.jumps())
    return total + sum(seg[4] for seg in c.segments())


def jump(c: TCCurve, t: float):
    """``d(c(t-), c(t))`` for ``t`` in ``(a, b]``."""
    return distance(c.space, evaluate_left(c, t), evaluate(c, t))


@dataclass(frozen=True)
class VariationFunction:
    """``t -> V(c|[a,t])`` as jumps plus linear ramps over polyline segments."""

    a: float
    b: float
    jump_times: tuple
    jump_sizes: tuple
    ramps: tuple  # (t0, t1, length)

    def __call__(self, t: float):
        return self._at(t, inclusive=True)

    def left(self, t: float):
        """Left limit ``V(t-)``; ``V(a-)`` is taken to be 0."""
        return self._at(t, inclusive=False)

    def _at(self, t: float, inclusive: bool):
        if not self.a <= t <= self.b:
            raise CurveError(f"time {t} outside [{self.a}, {self.b}]")
        total = sum(s for u, s in zip(self.jump_times, self.jump_sizes)
                    if (u <= t if inclusive else u < t))
        for t0, t1, length in self.ramps:
            if t >= t1:
                total += length
            elif t > t0:
                total += length * (t - t0) / (t1 - t0)
        return total

    def values(self, ts, inclusive: bool = True) -> np.ndarray:
        """Float evaluation at many times; ``inclusive=False`` gives left limits."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < self.a or ts.max() > self.b):
            raise CurveError(f"times outside [{self.a}, {self.b}]")
        jt = np.asarray(self.jump_times, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(np.asarray(self.jump_sizes, dtype=float))])
        out = cum[np.searchsorted(jt, ts, side="right" if inclusive else "left")]
        for t0, t1, length in self.ramps:
            out = out + float(length) * np.clip((ts - t0) / (t1 - t0), 0.0, 1.0)
        return out

    @property
    def total(self):
        return self(self.b)


def variation_function(c: TCCurve) -> VariationFunction:
    js = c.jumps()
    return VariationFunction(c.a, c.b, tuple(j[0] for j in js), tuple(j[3] for j in js),
                             tuple((s[0], s[1], s[4]) for s in c.segments()))


def reflected_variation(c: TCCurve, t):
    """The reversed variation function ``V_c((a+b-t)-)``, with ``V_c(a-) = V_c(a) = 0``.

    An array of times is evaluated in float arithmetic in one pass.
    """
    vf = variation_function(c)
    if np.ndim(t):
        ts = np.asarray(t, dtype=float)
        u = np.where(ts == c.a, c.b, np.where(ts == c.b, c.a, c.a + c.b - ts))
        return vf.values(u, inclusive=False)
    u = _reflect(c, t)
    return vf(u) if u == c.a else vf.left(u)


def _reflect(c: TCCurve, t: float) -> float:
    if t == c.a:
        return c.b
    if t == c.b:
        return c.a
    return c.a + c.b - t


# ---------------------------------------------------------------- transforms

def reverse(c: TCCurve) -> TCCurve:
    """``t -> c((a+b-t)-)`` with ``c(a-) = c(a)``."""
    out = []
    for i in reversed(range(len(c.pieces))):
        p = c.pieces[i]
        start = _reflect(c, c.piece_end(i))
        if isinstance(p, Step):
            out.append(Step(start, p.point))
        else:
            times = tuple(_reflect(c, t) for t in reversed(p.times))
            out.append(Polyline(times, tuple(reversed(p.vertices))))
    return make_curve(c.space, c.domain, out)


def left_adjusted_restrict(c: TCCurve, r: float, t: float) -> TCCurve:
    """Restriction to ``[r, t]`` whose value at ``t`` is the left limit ``c(t-)``."""
    if not c.a <= r < t <= c.b:
        raise CurveError(f"invalid restriction interval [{r}, {t}] of [{c.a}, {c.b}]")
    out = []
    for i, p in enumerate(c.pieces):
        lo, hi = max(p.start, r), min(c.piece_end(i), t)
        if not lo < hi:
            continue
        if isinstance(p, Step):
            out.append(Step(lo, p.point))
        else:
            out.append(p.cut(lo, hi))
    return make_curve(c.space, (r, t), out)


def restrict(c: TCCurve, r: float, t: float) -> TCCurve:
    """Plain restriction to ``[r, t]``; ``t`` must be ``b`` or a continuity point."""
    if not c.a <= r < t <= c.b:
        raise CurveError(f"invalid restriction interval [{r}, {t}] of [{c.a}, {c.b}]")
    if t != c.b and jump(c, t) > 0:
        raise CurveError(f"restriction would end at the discontinuity t={t}")
    return left_adjusted_restrict(c, r, t)


def reparametrize(c: TCCurve, target: Sequence[float]) -> TCCurve:
    """Compose with the increasing affine map from ``target`` onto the domain."""
    lo, hi = float(target[0]), float(target[1])
    if not lo < hi:
        raise CurveError(f"degenerate target interval [{lo}, {hi}]")
    if (lo, hi) == (c.a, c.b):
        return c

    def back(u: float) -> float:
        if u == c.a:
            return lo
        if u == c.b:
            return hi
        return lo + (u - c.a) * (hi - lo) / (c.b - c.a)

    out = []
    for p in c.pieces:
        if isinstance(p, Step):
            out.append(Step(back(p.start), p.point))
        else:
            out.append(Polyline(tuple(back(u) for u in p.times), p.vertices))
    return make_curve(c.space, (lo, hi), out)


def arc_length_parametrize(c: TCCurve) -> TCCurve:
    """Unit-speed version of a continuous polyline curve on ``[0, V(c)]``.

    Segments of zero length (pauses) are dropped, so ``c`` equals the result
    composed with the variation function.
    """
    if not all(isinstance(p, Polyline) for p in c.pieces) or not c.is_continuous:
        raise CurveError("arc-length parametrization needs a continuous polyline curve")
    verts = [np.asarray(c.pieces[0].vertices[0], dtype=float)]
    for p in c.pieces:
        for v in p.vertices[1:]:
            v = np.asarray(v, dtype=float)
            if np.linalg.norm(v - verts[-1]) > 0:
                verts.append(v)
    if len(verts) < 2:
        raise CurveError("arc-length parametrization of a zero-variation curve")
    lengths = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    times = np.concatenate([[0.0], np.cumsum(lengths)])
    return make_curve(c.space, (0.0, float(times[-1])),
                      [Polyline(tuple(times.tolist()), tuple(tuple(v) for v in verts))])
