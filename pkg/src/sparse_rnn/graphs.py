"""Random graph families and their conversion to layered architectures.

Two undirected generators: Watts-Strogatz small-world graphs (ring
lattice plus probabilistic rewiring, regenerated until connected) and
Barabasi-Albert preferential attachment (path seed on m+1 nodes, then m
degree-proportional attachments per new node).

An undirected graph becomes an architecture by orienting every edge
from the smaller to the larger node label, which is acyclic by
construction.  Each node's layer index is 0 for sources and one more
than the deepest parent otherwise; the layering drives how a
graph-structured recurrent model stacks its cell groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError, InputError
from .numerics import Rng


@dataclass(frozen=True)
class UGraph:
    """Undirected simple graph on nodes 0..n-1; edges stored as (a, b), a < b."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise DomainError(f"edge ({a}, {b}) outside 0..{self.n - 1}")
            if a >= b:
                raise DomainError(f"edge ({a}, {b}) must satisfy a < b")
            if (a, b) in seen:
                raise DomainError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))

    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def degree_sequence(self) -> list[int]:
        return [len(nbrs) for nbrs in self.adjacency()]


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes 0..n-1; every arc goes low to high."""

    n: int
    arcs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for a, b in self.arcs:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise DomainError(f"arc ({a}, {b}) outside 0..{self.n - 1}")
            if a >= b:
                raise DomainError(f"arc ({a}, {b}) must go from low to high label")
            if (a, b) in seen:
                raise DomainError(f"duplicate arc ({a}, {b})")
            seen.add((a, b))

    def parents(self) -> list[set[int]]:
        par = [set() for _ in range(self.n)]
        for a, b in self.arcs:
            par[b].add(a)
        return par

    def children(self) -> list[set[int]]:
        ch = [set() for _ in range(self.n)]
        for a, b in self.arcs:
            ch[a].add(b)
        return ch

    def sources(self) -> list[int]:
        par = self.parents()
        return [v for v in range(self.n) if not par[v]]

    def sinks(self) -> list[int]:
        ch = self.children()
        return [v for v in range(self.n) if not ch[v]]


def is_connected(g: UGraph) -> bool:
    if g.n == 0:
        return False
    adj = g.adjacency()
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def _ws_attempt(n: int, k: int, p: float, rng: Rng) -> UGraph:
    # Ring lattice: each node linked to its k/2 nearest on each side,
    # then each rightward lattice edge rewired with probability p.
    edge_set: set[tuple[int, int]] = set()
    for j in range(1, k // 2 + 1):
        for i in range(n):
            edge_set.add(tuple(sorted((i, (i + j) % n))))
    for j in range(1, k // 2 + 1):
        for i in range(n):
            old = tuple(sorted((i, (i + j) % n)))
            if old not in edge_set:
                continue
            if rng.random() >= p:
                continue
            candidates = [w for w in range(n)
                          if w != i and tuple(sorted((i, w))) not in edge_set]
            if not candidates:
                continue
            w = candidates[int(rng.integers(0, len(candidates)))]
            edge_set.remove(old)
            edge_set.add(tuple(sorted((i, w))))
    return UGraph(n, tuple(sorted(edge_set)))


def ws_generate(n: int, k: int, p: float, rng: Rng) -> UGraph:
    """Connected Watts-Strogatz graph; k must be even and < n, p in [0, 1].

    Disconnected draws are thrown away and regenerated from child
    streams, so the result depends only on the seed.
    """
    if k % 2 != 0 or k <= 0:
        raise DomainError(f"k must be a positive even number, got {k}")
    if k >= n:
        raise DomainError(f"need k < n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"rewiring probability {p} outside [0, 1]")
    for attempt in range(1000):
        g = _ws_attempt(n, k, p, rng.child(attempt))
        if is_connected(g):
            return g
    raise DomainError(f"no connected graph after 1000 attempts (n={n}, k={k}, p={p})")


def ba_generate(n: int, m: int, rng: Rng) -> UGraph:
    """Barabasi-Albert graph: path seed on m+1 nodes, then each new node
    attaches to m distinct existing nodes with degree-proportional odds."""
    if m < 1:
        raise DomainError(f"m must be at least 1, got {m}")
    if n <= m + 1:
        raise DomainError(f"need n > m + 1 seed nodes, got n={n}, m={m}")
    edges: set[tuple[int, int]] = {(i, i + 1) for i in range(m)}
    degree = [0] * n
    for i in range(m):
        degree[i] += 1
        degree[i + 1] += 1
    for v in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            t = rng.choice_weighted(v, degree[:v])
            targets.add(t)
        for t in targets:
            edges.add((t, v))
            degree[t] += 1
            degree[v] += 1
    return UGraph(n, tuple(sorted(edges)))


def to_dag(g: UGraph) -> Dag:
    """Orient every edge from the smaller to the larger label."""
    return Dag(g.n, tuple(sorted(g.edges)))


def layer_index(dag: Dag) -> dict[int, int]:
    """Layer of each node: 0 for sources, else 1 + max over parents.

    Equals the longest directed path length from any source to the node.
    """
    par = dag.parents()
    layers: dict[int, int] = {}
    for v in range(dag.n):          # arcs go low to high, so this is topological
        if not par[v]:
            layers[v] = 0
        else:
            layers[v] = 1 + max(layers[u] for u in par[v])
    return layers


def n_layers(dag: Dag) -> int:
    return max(layer_index(dag).values()) + 1 if dag.n else 0


@dataclass(frozen=True)
class ArchGraph:
    """A generated architecture: base graph, its DAG, and the generating parameters."""

    family: str                    # "ws" or "ba"
    params: dict
    seed: int
    graph: UGraph
    dag: Dag = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dag", to_dag(self.graph))

    def layers(self) -> dict[int, int]:
        return layer_index(self.dag)


def generate_arch(family: str, n: int, seed: int, k: int = 4, p: float = 0.5,
                  m: int = 2) -> ArchGraph:
    """Build a named-family architecture from a seed."""
    rng = Rng(seed)
    if family == "ws":
        g = ws_generate(n, k, p, rng)
        params = {"n": n, "k": k, "p": p}
    elif family == "ba":
        g = ba_generate(n, m, rng)
        params = {"n": n, "m": m}
    else:
        raise InputError(f"unknown graph family {family!r}; use 'ws' or 'ba'")
    return ArchGraph(family, params, seed, g)


# -- persistence -----------------------------------------------------------
# Edge-list text files: the node count alone on the first non-comment
# line, then one 'u v' line per edge.  '.ug' holds an undirected graph;
# '.dag' holds oriented arcs plus 'L v idx' trailer lines giving each
# node's layer index.  '#' lines are comments.

def save_graph(g: UGraph | Dag, path: str | Path, header_comment: str | None = None):
    directed = isinstance(g, Dag)
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append(str(g.n))
    for a, b in (g.arcs if directed else g.edges):
        lines.append(f"{a} {b}")
    if directed:
        for v, idx in sorted(layer_index(g).items()):
            lines.append(f"L {v} {idx}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path) -> UGraph | Dag:
    n = None
    edges: list[tuple[int, int]] = []
    layers: dict[int, int] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None and len(parts) == 1:
            n = int(parts[0])
        elif parts[0] == "L" and len(parts) == 3:
            layers[int(parts[1])] = int(parts[2])
        elif len(parts) == 2 and n is not None:
            edges.append((int(parts[0]), int(parts[1])))
        else:
            raise InputError(f"{path}: cannot parse line {raw!r}")
    if n is None:
        raise InputError(f"{path}: missing node-count line")
    directed = bool(layers) or str(path).endswith(".dag")
    if not directed:
        return UGraph(n, tuple(sorted(edges)))
    dag = Dag(n, tuple(sorted(edges)))
    if layers and layers != layer_index(dag):
        raise InputError(f"{path}: layer trailer disagrees with the arcs")
    return dag
