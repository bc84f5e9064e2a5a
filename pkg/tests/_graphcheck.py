"""Brute-force graph oracles shared by the graph, metric and acceptance tests.

Everything here recomputes results from first principles with different
algorithms than the package uses: layers via boolean powers of the
adjacency matrix instead of a topological sweep, distances via
Floyd-Warshall instead of BFS, and betweenness by enumerating every
shortest path instead of Brandes accumulation.  Sizes stay small enough
that exhaustive enumeration is honest.
"""

import itertools

import numpy as np

from sparse_rnn.graphs import Dag, UGraph, is_connected

INF = float("inf")


def all_node_pairs(n: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def all_dags(n: int):
    """Every DAG on nodes 0..n-1 whose arcs go from low to high label."""
    pairs = all_node_pairs(n)
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        yield Dag(n, tuple(p for p, keep in zip(pairs, bits) if keep))


def all_connected_graphs(n: int):
    """Every connected simple graph on nodes 0..n-1."""
    pairs = all_node_pairs(n)
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        g = UGraph(n, tuple(p for p, keep in zip(pairs, bits) if keep))
        if is_connected(g):
            yield g


def longest_path_layers(dag: Dag) -> dict[int, int]:
    """Layer oracle: the longest walk length ending at each node.

    Computed from powers of the adjacency matrix; in an acyclic graph
    every walk is a path, so entry (u, v) of the k-th power counts
    length-k paths.
    """
    n = dag.n
    layers = {v: 0 for v in range(n)}
    adj = np.zeros((n, n), dtype=np.int64)
    for a, b in dag.arcs:
        adj[a, b] = 1
    power = adj.copy()
    for k in range(1, n):
        for v in range(n):
            if power[:, v].any():
                layers[v] = k
        power = power @ adj
    return layers


def floyd_warshall(g: UGraph) -> list[list[float]]:
    n = g.n
    dist = [[0.0 if i == j else INF for j in range(n)] for i in range(n)]
    for a, b in g.edges:
        dist[a][b] = dist[b][a] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = dist[i][k] + dist[k][j]
                if via < dist[i][j]:
                    dist[i][j] = via
    return dist


def _shortest_paths(g: UGraph, s: int, t: int, dist) -> list[tuple[int, ...]]:
    """All shortest s-t paths, found by depth-first path enumeration."""
    target_len = dist[s][t]
    if target_len == INF:
        return []
    adj = g.adjacency()
    out: list[tuple[int, ...]] = []

    def extend(path: tuple[int, ...]):
        v = path[-1]
        if v == t:
            if len(path) - 1 == target_len:
                out.append(path)
            return
        if len(path) - 1 >= target_len:
            return
        for w in adj[v]:
            if w not in path:
                extend(path + (w,))

    extend((s,))
    return out


def brute_metrics(g: UGraph) -> dict:
    """Distance and centrality statistics recomputed the slow way."""
    n = g.n
    dist = floyd_warshall(g)
    pair_d = [dist[a][b] for a, b in all_node_pairs(n)]
    ecc = [max(dist[v]) for v in range(n)] if n > 1 else [0.0]
    degree = [float(d) for d in g.degree_sequence()]
    closeness = [(n - 1) / sum(dist[v]) if n > 1 else 0.0 for v in range(n)]
    node_bet = [0.0] * n
    edge_bet = {e: 0.0 for e in g.edges}
    for s, t in all_node_pairs(n):
        paths = _shortest_paths(g, s, t, dist)
        if not paths:
            continue
        share = 1.0 / len(paths)
        for path in paths:
            for v in path[1:-1]:
                node_bet[v] += share
            for a, b in zip(path, path[1:]):
                edge_bet[(min(a, b), max(a, b))] += share
    return {
        "diameter": max(pair_d) if pair_d else 0.0,
        "density": (2.0 * len(g.edges) / (n * (n - 1))) if n > 1 else 0.0,
        "average_shortest_path_length":
            sum(pair_d) / len(pair_d) if pair_d else 0.0,
        "eccentricity": ecc,
        "degree": degree,
        "closeness": closeness,
        "nodes_betweenness": node_bet,
        "edge_betweenness": [edge_bet[e] for e in g.edges],
    }
