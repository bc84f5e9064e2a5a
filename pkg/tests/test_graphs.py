"""Random graph generators, DAG conversion, layer indexing, persistence.

Exact combinatorial anchors: the p=0 small-world graph is the bare ring
lattice, attachment graphs have m new edges per added node, and layer
indices equal longest-path lengths on every DAG with up to six nodes.
"""

import itertools

import numpy as np
import pytest

from _graphcheck import all_dags, longest_path_layers

from sparse_rnn.errors import DomainError, InputError
from sparse_rnn.graphs import (ArchGraph, Dag, UGraph, ba_generate,
                               generate_arch, is_connected, layer_index,
                               load_graph, n_layers, save_graph, to_dag,
                               ws_generate)
from sparse_rnn.numerics import Rng

# Five-node example: arcs and the layer indices they induce.
EXAMPLE_DAG = Dag(5, ((0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)))
EXAMPLE_LAYERS = {0: 0, 1: 0, 2: 1, 3: 2, 4: 3}


def ring_lattice_edges(n: int, k: int) -> set[tuple[int, int]]:
    return {tuple(sorted((i, (i + j) % n)))
            for j in range(1, k // 2 + 1) for i in range(n)}


class TestGraphTypes:
    def test_edge_validation(self):
        with pytest.raises(DomainError):
            UGraph(3, ((0, 3),))
        with pytest.raises(DomainError):
            UGraph(3, ((2, 1),))
        with pytest.raises(DomainError):
            UGraph(3, ((1, 1),))
        with pytest.raises(DomainError):
            UGraph(3, ((0, 1), (0, 1)))
        with pytest.raises(DomainError):
            Dag(3, ((2, 0),))

    def test_adjacency_and_degrees(self):
        g = UGraph(4, ((0, 1), (1, 2), (1, 3)))
        assert g.adjacency() == [{1}, {0, 2, 3}, {1}, {1}]
        assert g.degree_sequence() == [1, 3, 1, 1]

    def test_dag_relations(self):
        assert EXAMPLE_DAG.parents()[3] == {1, 2}
        assert EXAMPLE_DAG.children()[2] == {3, 4}
        assert EXAMPLE_DAG.sources() == [0, 1]
        assert EXAMPLE_DAG.sinks() == [4]

    def test_connectivity(self):
        assert is_connected(UGraph(3, ((0, 1), (1, 2))))
        assert not is_connected(UGraph(3, ((0, 1),)))
        assert is_connected(UGraph(1, ()))
        assert not is_connected(UGraph(0, ()))


class TestWattsStrogatz:
    @pytest.mark.parametrize("n,k", [(10, 2), (10, 4), (12, 6), (5, 4)])
    def test_zero_rewiring_is_exact_ring_lattice(self, n, k):
        g = ws_generate(n, k, 0.0, Rng(0))
        assert set(g.edges) == ring_lattice_edges(n, k)
        assert len(g.edges) == n * k // 2
        assert g.degree_sequence() == [k] * n

    @pytest.mark.parametrize("p", [0.0, 0.3, 0.7, 1.0])
    def test_edge_count_invariant_under_rewiring(self, p):
        for seed in range(10):
            g = ws_generate(14, 4, p, Rng(seed))
            assert len(g.edges) == 14 * 4 // 2

    def test_full_rewiring_leaves_the_lattice(self):
        g = ws_generate(20, 4, 1.0, Rng(3))
        assert set(g.edges) != ring_lattice_edges(20, 4)

    def test_always_connected(self):
        for seed in range(60):
            n = 10 + seed % 20
            assert is_connected(ws_generate(n, 4, 0.9, Rng(seed)))

    def test_deterministic_in_seed(self):
        assert ws_generate(15, 4, 0.5, Rng(9)) == ws_generate(15, 4, 0.5, Rng(9))
        assert ws_generate(15, 4, 0.5, Rng(9)) != ws_generate(15, 4, 0.5, Rng(10))

    @pytest.mark.parametrize("n,k,p", [
        (10, 3, 0.5),    # odd k
        (10, 0, 0.5),
        (10, -2, 0.5),
        (4, 4, 0.5),     # k must stay below n
        (10, 4, -0.1),
        (10, 4, 1.5),
    ])
    def test_preconditions(self, n, k, p):
        with pytest.raises(DomainError):
            ws_generate(n, k, p, Rng(0))


class TestBarabasiAlbert:
    @pytest.mark.parametrize("n,m", [(10, 1), (10, 2), (25, 3)])
    def test_node_and_edge_counts(self, n, m):
        for seed in range(10):
            g = ba_generate(n, m, Rng(seed))
            assert g.n == n
            added = n - (m + 1)
            assert len(g.edges) == m + m * added

    def test_new_nodes_attach_to_distinct_targets(self):
        for seed in range(20):
            g = ba_generate(12, 3, Rng(seed))
            degrees = g.degree_sequence()
            assert all(d >= 3 for d in degrees[4:])

    def test_always_connected(self):
        for seed in range(60):
            assert is_connected(ba_generate(10 + seed % 20, 2, Rng(seed)))

    def test_early_nodes_become_hubs(self):
        early, late = [], []
        for seed in range(40):
            degrees = ba_generate(25, 2, Rng(seed)).degree_sequence()
            early.append(np.mean(degrees[:3]))
            late.append(np.mean(degrees[-3:]))
        assert np.mean(early) > np.mean(late) + 1.0

    def test_deterministic_in_seed(self):
        assert ba_generate(15, 2, Rng(4)) == ba_generate(15, 2, Rng(4))

    @pytest.mark.parametrize("n,m", [(3, 2), (2, 1), (10, 0), (10, -1)])
    def test_preconditions(self, n, m):
        with pytest.raises(DomainError):
            ba_generate(n, m, Rng(0))


class TestLayerIndexing:
    def test_example_dag_layers(self):
        assert layer_index(EXAMPLE_DAG) == EXAMPLE_LAYERS
        assert n_layers(EXAMPLE_DAG) == 4

    def test_orientation_low_to_high(self):
        g = UGraph(4, ((0, 3), (1, 2), (2, 3)))
        dag = to_dag(g)
        assert dag.arcs == ((0, 3), (1, 2), (2, 3))
        assert all(a < b for a, b in dag.arcs)

    def test_chain_and_antichain(self):
        chain = Dag(4, ((0, 1), (1, 2), (2, 3)))
        assert layer_index(chain) == {0: 0, 1: 1, 2: 2, 3: 3}
        empty = Dag(3, ())
        assert layer_index(empty) == {0: 0, 1: 0, 2: 0}
        assert n_layers(empty) == 1
        assert n_layers(Dag(0, ())) == 0

    def test_skip_arc_takes_longest_route(self):
        dag = Dag(4, ((0, 1), (1, 2), (2, 3), (0, 3)))
        assert layer_index(dag)[3] == 3

    @pytest.mark.parametrize("n", range(7))
    def test_matches_longest_path_oracle_exhaustively(self, n):
        for dag in all_dags(n):
            assert layer_index(dag) == longest_path_layers(dag)


class TestArchGraph:
    def test_ws_family(self):
        arch = generate_arch("ws", 12, seed=5)
        assert arch.family == "ws"
        assert arch.params == {"n": 12, "k": 4, "p": 0.5}
        assert arch.seed == 5
        assert is_connected(arch.graph)
        assert arch.dag == to_dag(arch.graph)
        assert arch.layers() == layer_index(arch.dag)

    def test_ba_family(self):
        arch = generate_arch("ba", 12, seed=5)
        assert arch.params == {"n": 12, "m": 2}
        assert len(arch.graph.edges) == 2 + 2 * (12 - 3)

    def test_unknown_family_rejected(self):
        with pytest.raises(InputError):
            generate_arch("erdos", 12, seed=0)

    def test_same_seed_same_architecture(self):
        a = generate_arch("ws", 14, seed=8)
        b = generate_arch("ws", 14, seed=8)
        assert a.graph == b.graph and a.dag == b.dag


class TestPersistence:
    def test_undirected_round_trip(self, tmp_path):
        g = ws_generate(12, 4, 0.5, Rng(2))
        path = tmp_path / "graph.ug"
        save_graph(g, path, header_comment="v1 config=abc")
        text = path.read_text()
        assert text.startswith("# v1 config=abc\n12\n")
        assert load_graph(path) == g

    def test_dag_round_trip_with_layer_trailers(self, tmp_path):
        path = tmp_path / "graph.dag"
        save_graph(EXAMPLE_DAG, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "5"
        assert lines[1:7] == ["0 2", "1 2", "1 3", "2 3", "2 4", "3 4"]
        assert lines[7:] == [f"L {v} {idx}" for v, idx in
                             sorted(EXAMPLE_LAYERS.items())]
        assert load_graph(path) == EXAMPLE_DAG

    def test_save_is_byte_deterministic(self, tmp_path):
        g = ba_generate(15, 2, Rng(6))
        a, b = tmp_path / "a.ug", tmp_path / "b.ug"
        save_graph(g, a)
        save_graph(g, b)
        assert a.read_bytes() == b.read_bytes()

    def test_extension_decides_type_without_trailers(self, tmp_path):
        path = tmp_path / "empty.dag"
        path.write_text("3\n")
        assert load_graph(path) == Dag(3, ())
        upath = tmp_path / "empty.ug"
        upath.write_text("3\n")
        assert load_graph(upath) == UGraph(3, ())

    def test_tampered_layer_trailer_rejected(self, tmp_path):
        path = tmp_path / "graph.dag"
        save_graph(EXAMPLE_DAG, path)
        text = path.read_text().replace("L 4 3", "L 4 1")
        path.write_text(text)
        with pytest.raises(InputError):
            load_graph(path)

    def test_unparseable_line_rejected(self, tmp_path):
        path = tmp_path / "graph.ug"
        path.write_text("3\n0 1 junk extra\n")
        with pytest.raises(InputError):
            load_graph(path)

    def test_missing_count_rejected(self, tmp_path):
        path = tmp_path / "graph.ug"
        path.write_text("# only a comment\n")
        with pytest.raises(InputError):
            load_graph(path)
