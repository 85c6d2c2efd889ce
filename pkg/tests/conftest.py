"""Shared generators for randomized tests; everything is seeded."""

import numpy as np
import pytest

from freep import Molecule, PMetricSpace, random_p_metric


def make_space(rng, m, q):
    """Random valid q-metric space on m labelled points."""
    return random_p_metric(m, q, rng)


def make_molecule(rng, space, zero_prob=0.0, low=-2.0, high=2.0):
    """Random molecule over the non-base points; never all-zero."""
    while True:
        coeffs = {}
        for v in space.non_base_indices():
            if rng.uniform() < zero_prob:
                coeffs[v] = 0.0
            else:
                coeffs[v] = float(rng.uniform(low, high))
        if any(c != 0.0 for c in coeffs.values()):
            return Molecule(coeffs)


def make_three_point(rng, p):
    """(d_x, d_y, d_xy) forming a valid p-metric triangle."""
    d_x, d_y = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 2))
    lo = abs(d_x ** p - d_y ** p) ** (1.0 / p)
    hi = (d_x ** p + d_y ** p) ** (1.0 / p)
    d_xy = float(rng.uniform(max(lo, 1e-3), hi))
    return float(d_x), float(d_y), d_xy


def condition_c_space(rng, m, q):
    """Random q-metric space where every point is closest to the base.

    Base distances r_x are free; off-base distances are sampled inside
    [max(r_x, r_y), (r_x^q + r_y^q)^(1/q)] and repaired by the closure,
    which provably keeps both the base distances and the condition.
    """
    r = np.exp(rng.uniform(np.log(0.5), np.log(5.0), m))
    dist = np.zeros((m, m))
    for x in range(1, m):
        dist[0, x] = dist[x, 0] = r[x]
    for x in range(1, m):
        for y in range(x + 1, m):
            lo = max(r[x], r[y])
            hi = (r[x] ** q + r[y] ** q) ** (1.0 / q)
            dist[x, y] = dist[y, x] = rng.uniform(lo, hi)
    from freep import p_metric_closure
    dist = p_metric_closure(dist, q)
    labels = tuple(f"p{i}" for i in range(m))
    return PMetricSpace(labels, 0, q, dist, validate=False)


@pytest.fixture(params=["compiled", "pure"])
def backend(request):
    from freep import available_backends
    if request.param not in available_backends():
        pytest.skip(f"{request.param} kernel not built")
    return request.param
