"""Random network generators shared by the test modules."""

import numpy as np

from pdk.network import DiscreteState, hybrid_unbalanced_spec, parallel_spec, series_spec


def spaced(rng, n, lo, hi, gap):
    """``n`` sorted frequencies in ``[lo, hi]`` at least ``gap`` apart."""
    while True:
        w = np.sort(rng.uniform(lo, hi, n))
        if n == 1 or np.min(np.diff(w)) >= gap:
            return w


def random_parallel(rng, n):
    k = rng.uniform(0.3, 3.0)
    om = spaced(rng, n, -10, 10, 0.2)
    gam = rng.uniform(0.2, 2.0, n)
    return parallel_spec(DiscreteState(float(w), float(g), float(k * g)) for w, g in zip(om, gam))


def random_series(rng, n):
    om = rng.uniform(-3, 3, n)
    return series_spec(om, rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0, n - 1))


def random_hybrid_manifolds(rng, n):
    m = int(rng.integers(2, min(4, n) + 1))
    sizes = np.ones(m, dtype=int)
    for _ in range(n - m):
        sizes[rng.integers(m)] += 1
    mans = []
    for size in sizes:
        k = rng.uniform(0.3, 3.0)
        om = spaced(rng, int(size), -5, 5, 0.2)
        gam = rng.uniform(0.2, 2.0, int(size))
        mans.append([DiscreteState(float(w), float(g), float(k * g)) for w, g in zip(om, gam)])
    return mans


def random_hybrid(rng, n):
    return hybrid_unbalanced_spec(random_hybrid_manifolds(rng, max(n, 2)))


def random_network(rng, kind, n):
    return {"parallel": random_parallel, "series": random_series, "hybrid": random_hybrid}[kind](rng, n)
