"""Random curve generators shared by the test modules."""
import numpy as np

from tccalc.curve import Polyline, Step, make_curve


def random_times(rng, k, a=0.0, b=1.0):
    inner = np.sort(rng.choice(np.arange(1, 64), size=k, replace=False)) / 64.0
    return [a] + [a + (b - a) * t for t in inner]


def random_step_curve(rng, s, max_jumps=4, domain=(0.0, 1.0)):
    j = int(rng.integers(0, max_jumps + 1))
    pts = [int(rng.integers(s.n))]
    for _ in range(j):
        pts.append(int(rng.choice([x for x in range(s.n) if x != pts[-1]] or [pts[-1]])))
    return make_curve(s, domain, [Step(t, p) for t, p in zip(random_times(rng, j, *domain), pts)])


def random_polyline(rng, s, vertices=None, domain=(0.0, 1.0)):
    """Continuous polyline through random points of the embedding's bounding box."""
    k = int(rng.integers(2, 7)) if vertices is None else vertices
    dim = s.coords.shape[1]
    verts = [tuple(v) for v in rng.uniform(0, 1, size=(k, dim))]
    times = random_times(rng, k - 2, *domain) + [domain[1]]
    return make_curve(s, domain, [Polyline(tuple(times), tuple(verts))])


def random_mixed_curve(rng, s, domain=(0.0, 1.0)):
    """Step piece, then a polyline, then another step: jumps at both seams."""
    a, b = domain
    t1, t2 = sorted(rng.choice(np.arange(1, 32), size=2, replace=False) / 32.0)
    t1, t2 = a + (b - a) * t1, a + (b - a) * t2
    dim = s.coords.shape[1]
    verts = [tuple(v) for v in rng.uniform(0, 1, size=(3, dim))]
    poly = Polyline((t1, (t1 + t2) / 2, t2), tuple(verts))
    return make_curve(s, domain, [Step(a, int(rng.integers(s.n))), poly,
                                  Step(t2, int(rng.integers(s.n)))])
