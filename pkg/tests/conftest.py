import math

import numpy as np
import pytest

from fpp.constants import ModelConstants
from fpp.distributions import Exponential, Gaussian


@pytest.fixture(scope="session")
def gauss():
    return Gaussian(2.0, 1.0)


@pytest.fixture(scope="session")
def gauss_consts(gauss):
    return ModelConstants.from_distribution(gauss, 2.0)


@pytest.fixture(scope="session")
def expo_consts():
    return ModelConstants.from_distribution(Exponential(1.0), 2.0)


def unit_constants(lam=3.0):
    """alpha = gamma = beta = 1: raw and rescaled coordinates differ by plain shifts."""
    return ModelConstants(lam=lam, alpha=1.0, gamma=1.0, beta=1.0, s_star=1.0, alpha_prime=2.0, psi_d1=-1.0, psi_d2=1.0)


def all_simple_paths(g, s, t):
    """Every simple s-t path as (weight, hops, vertices), by plain DFS."""
    out = []
    stack = [(s, (s,), 0.0)]
    while stack:
        v, path, w = stack.pop()
        if v == t:
            out.append((w, len(path) - 1, path))
            continue
        labels, ws = g.neighbors(v)
        for x, wx in zip(labels.tolist(), ws.tolist()):
            if x not in path:
                stack.append((x, path + (x,), w + wx))
    return out


def random_small_graph(rng, n, lam, mu=0.3, sd=1.0):
    from fpp.graph import WeightedGraph

    edges = []
    p = min(1.0, lam / n)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, float(rng.normal(mu, sd))))
    return WeightedGraph.from_edges(n, edges)
