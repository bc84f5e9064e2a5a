"""Graph property measurement for generated architectures.

Distance-based metrics (diameter, average shortest path length,
eccentricity, closeness) and Brandes betweenness run on the undirected
base graph, which generation guarantees is connected.  Layer count and
source/sink counts come from the oriented DAG.  Betweenness values are
unnormalized shortest-path counts, halved so each unordered pair is
counted once.

A full record is a flat dict with a fixed set of 23 keys; mean, var and
std aggregate per-node (or per-edge) values with population variance.
"""

from __future__ import annotations

from collections import deque

from .errors import DomainError
from .graphs import ArchGraph, Dag, UGraph, n_layers
from .numerics import stats

RECORD_KEYS = (
    "layers", "nodes", "edges", "source_nodes", "sink_nodes",
    "diameter", "density", "average_shortest_path_length",
    "eccentricity_mean", "eccentricity_var", "eccentricity_std",
    "degree_mean", "degree_var", "degree_std",
    "closeness_mean", "closeness_var", "closeness_std",
    "nodes_betweenness_mean", "nodes_betweenness_var", "nodes_betweenness_std",
    "edge_betweenness_mean", "edge_betweenness_var", "edge_betweenness_std",
)


def bfs_distances(g: UGraph, source: int) -> list[int]:
    """Hop distances from source; -1 marks unreachable nodes."""
    adj = g.adjacency()
    dist = [-1] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def all_pairs_distances(g: UGraph) -> list[list[int]]:
    return [bfs_distances(g, s) for s in range(g.n)]


def _require_connected(dist: list[list[int]]):
    if any(d < 0 for row in dist for d in row):
        raise DomainError("distance metrics need a connected graph")


def diameter(g: UGraph) -> int:
    dist = all_pairs_distances(g)
    _require_connected(dist)
    return max(max(row) for row in dist)


def density(g: UGraph | Dag) -> float:
    """Edge count over possible edges: ordered pairs for DAGs, unordered
    otherwise."""
    n = g.n
    if n < 2:
        raise DomainError("density needs at least two nodes")
    if isinstance(g, Dag):
        return len(g.arcs) / (n * (n - 1))
    return 2.0 * len(g.edges) / (n * (n - 1))


def average_shortest_path_length(g: UGraph) -> float:
    dist = all_pairs_distances(g)
    _require_connected(dist)
    n = g.n
    if n < 2:
        raise DomainError("average path length needs at least two nodes")
    total = sum(d for row in dist for d in row)
    return total / (n * (n - 1))


def eccentricities(g: UGraph) -> list[int]:
    dist = all_pairs_distances(g)
    _require_connected(dist)
    return [max(row) for row in dist]


def closeness(g: UGraph) -> list[float]:
    """Per node: (n - 1) / sum of distances to every other node."""
    dist = all_pairs_distances(g)
    _require_connected(dist)
    return [(g.n - 1) / sum(row) for row in dist]


def betweenness(g: UGraph) -> tuple[list[float], dict[tuple[int, int], float]]:
    """Node and edge betweenness by Brandes' accumulation.

    Counts, for every unordered pair of distinct nodes, the fraction of
    shortest paths through each interior node (and along each edge).
    """
    if any(d < 0 for d in bfs_distances(g, 0)):
        raise DomainError("betweenness needs a connected graph")
    adj = g.adjacency()
    n = g.n
    node_bt = [0.0] * n
    edge_bt = {e: 0.0 for e in g.edges}
    for s in range(n):
        order: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0.0] * n
        sigma[s] = 1.0
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                share = sigma[v] / sigma[w] * (1.0 + delta[w])
                delta[v] += share
                edge = (v, w) if v < w else (w, v)
                edge_bt[edge] += share
            if w != s:
                node_bt[w] += delta[w]
    node_bt = [b / 2.0 for b in node_bt]
    edge_bt = {e: b / 2.0 for e, b in edge_bt.items()}
    return node_bt, edge_bt


def node_betweenness(g: UGraph) -> list[float]:
    return betweenness(g)[0]


def edge_betweenness(g: UGraph) -> dict[tuple[int, int], float]:
    return betweenness(g)[1]


def full_record(arch: ArchGraph) -> dict[str, float]:
    """All 23 properties of one architecture, keyed by RECORD_KEYS."""
    g = arch.graph
    dag = arch.dag
    dist = all_pairs_distances(g)
    _require_connected(dist)
    ecc = [max(row) for row in dist]
    clo = [(g.n - 1) / sum(row) for row in dist]
    deg = g.degree_sequence()
    node_bt, edge_bt = betweenness(g)
    ecc_m, ecc_v, ecc_s = stats(ecc)
    deg_m, deg_v, deg_s = stats(deg)
    clo_m, clo_v, clo_s = stats(clo)
    nbt_m, nbt_v, nbt_s = stats(node_bt)
    ebt_m, ebt_v, ebt_s = stats(list(edge_bt.values()))
    record = {
        "layers": float(n_layers(dag)),
        "nodes": float(g.n),
        "edges": float(len(g.edges)),
        "source_nodes": float(len(dag.sources())),
        "sink_nodes": float(len(dag.sinks())),
        "diameter": float(max(ecc)),
        "density": density(g),
        "average_shortest_path_length":
            sum(d for row in dist for d in row) / (g.n * (g.n - 1)),
        "eccentricity_mean": ecc_m, "eccentricity_var": ecc_v,
        "eccentricity_std": ecc_s,
        "degree_mean": deg_m, "degree_var": deg_v, "degree_std": deg_s,
        "closeness_mean": clo_m, "closeness_var": clo_v, "closeness_std": clo_s,
        "nodes_betweenness_mean": nbt_m, "nodes_betweenness_var": nbt_v,
        "nodes_betweenness_std": nbt_s,
        "edge_betweenness_mean": ebt_m, "edge_betweenness_var": ebt_v,
        "edge_betweenness_std": ebt_s,
    }
    assert tuple(record) == RECORD_KEYS
    return record
