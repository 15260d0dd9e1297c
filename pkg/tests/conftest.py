"""Shared oracles for the test suite.

The extended-precision oracles recompute the pair potential and the
configuration energy with mpmath at 60 significant digits, independently of
the library's log-domain code path.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np
import pytest


@pytest.fixture(scope="session")
def mp_pair_log_energy():
    def oracle(xi, xj, ki, kj, s, d, alpha, beta):
        with mp.workdps(60):
            r = mp.sqrt(mp.fsum((mp.mpf(a) - mp.mpf(b)) ** 2
                                for a, b in zip(np.atleast_1d(xi),
                                                np.atleast_1d(xj))))
            bracket = mp.mpf(alpha) * mp.mpf(ki) * mp.mpf(kj) + mp.mpf(beta) * r
            return bracket ** (mp.mpf(-s) / (2 * d)) - mp.mpf(s) * mp.log(r)
    return oracle


@pytest.fixture(scope="session")
def mp_config_log_energy(mp_pair_log_energy):
    def oracle(points, kappas, s, d, alpha, beta):
        pts = np.atleast_2d(points)
        n = pts.shape[0]
        with mp.workdps(60):
            terms = []
            for i in range(n):
                for j in range(i + 1, n):
                    terms.append(mp.exp(mp_pair_log_energy(
                        pts[i], pts[j], kappas[i], kappas[j],
                        s, d, alpha, beta)))
            return mp.log(mp.fsum(terms)) / mp.mpf(s)
    return oracle


def random_configuration(rng, n, d=1, low=0.0, high=3.0, min_gap=0.01):
    """Random points with a guaranteed pairwise gap, plus positive kappas."""
    while True:
        pts = rng.uniform(low, high, size=(n, d))
        if n < 2:
            break
        from scipy.spatial.distance import pdist
        if pdist(pts).min() >= min_gap:
            break
    kap = rng.uniform(0.05, 3.0, size=n)
    return pts, kap
