"""Wire a recurrent network from a random graph and train it.

A Watts-Strogatz graph is oriented into a DAG (every edge points from
lower to higher label), nodes are grouped into layers by longest path
from a source, and each layer becomes a recurrent group whose units
receive input only along the DAG's arcs.  Graph shape then becomes a
model property that can be correlated with accuracy.
"""

from sparse_rnn.graphs import generate_arch, layer_index
from sparse_rnn.metrics import full_record
from sparse_rnn.numerics import Rng
from sparse_rnn.randstruct import build_model
from sparse_rnn.reber import build_dataset

arch = generate_arch("ws", n=16, seed=7, k=4, p=0.5)
print(f"graph: {arch.graph.n} nodes, {len(arch.graph.edges)} edges")

layers = layer_index(arch.dag)
print(f"layer index per node: {layers}")

record = full_record(arch)
print("\ngraph properties:")
for key in ("layers", "nodes", "edges", "source_nodes", "sink_nodes",
            "diameter", "density", "nodes_betweenness_var"):
    print(f"  {key}: {record[key]:.4f}")

dataset = build_dataset(4000, Rng(0))
model = build_model(arch, "gru", rng=Rng(1))
print(f"\nmodel with {model.n_params()} parameters, "
      f"{len(model.groups)} recurrent groups")

history = model.train(dataset, epochs=10, batch_size=64, lr=1e-3,
                      rng=Rng(2), target_accuracy=0.93)
print(f"test accuracy after {len(history)} epochs: "
      f"{history[-1]['test_accuracy']:.4f}")
