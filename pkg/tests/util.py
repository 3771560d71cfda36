"""Shared builders for the test suite: standard topologies and catalogs."""

import numpy as np

from syncflow import WeightedDigraph


def undirected(n, pairs, weight=1.0):
    arcs = []
    for i, j in pairs:
        arcs.append((i, j, weight))
        arcs.append((j, i, weight))
    return WeightedDigraph(n, tuple(arcs))


def path_graph(n, weight=1.0):
    return undirected(n, [(i, i + 1) for i in range(n - 1)], weight)


def ring_graph(n, weight=1.0):
    return undirected(n, [(i, (i + 1) % n) for i in range(n)], weight)


def star_graph(n, weight=1.0):
    return undirected(n, [(0, i) for i in range(1, n)], weight)


def complete_graph(n, weight=1.0):
    return undirected(n, [(i, j) for i in range(n) for j in range(i + 1, n)], weight)


def random_tree(n, seed=0, weight=1.0):
    rng = np.random.default_rng(seed)
    return undirected(n, [(int(rng.integers(0, i)), i) for i in range(1, n)], weight)


def five_topologies(n=5):
    return {
        "path": path_graph(n),
        "ring": ring_graph(n),
        "star": star_graph(n),
        "complete": complete_graph(n),
        "tree": random_tree(n, seed=11),
    }
