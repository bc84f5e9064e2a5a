"""Laboratory for inducing and measuring sparsity in recurrent networks.

The package covers the full experiment pipeline: Reber grammar string
generation and validation, recurrent sequence classifiers (plain tanh
and ReLU cells, LSTM, GRU) trained with backpropagation through time,
magnitude pruning with retraining, recurrent models wired from random
Watts-Strogatz and Barabasi-Albert graphs, graph property measurement,
and correlation plus regression analysis of which properties predict
accuracy.
"""

__version__ = "0.1.0"

from .cells import CellKind
from .errors import (ConfigError, ContractViolation, DomainError, InputError,
                     ShapeError)
from .graphs import (ArchGraph, Dag, UGraph, ba_generate, generate_arch,
                     layer_index, load_graph, save_graph, to_dag, ws_generate)
from .metrics import RECORD_KEYS, full_record
from .model import RecurrentModel, SequenceClassifier, cross_entropy
from .numerics import Rng
from .pruning import (MaskSet, PruneTarget, apply_masks, build_masks,
                      compute_threshold, prune, prune_sweep, retrain_masked)
from .randstruct import RandStructModel, RunSettings, run_random_experiments
from .reber import Dataset, LabeledSequence, build_dataset, generate_true, validate
from .analysis import (CIRCUMSTANCE_SUBSETS, FeatureTable, fit_random_forest,
                       fit_ridge, importance_circumstances, pearson, r_squared,
                       table_from_records)

__all__ = [
    "__version__",
    "ArchGraph", "CIRCUMSTANCE_SUBSETS", "CellKind", "ConfigError",
    "ContractViolation", "Dag", "Dataset", "DomainError", "FeatureTable",
    "InputError", "LabeledSequence", "MaskSet", "PruneTarget", "RECORD_KEYS",
    "RandStructModel", "RecurrentModel", "Rng", "RunSettings",
    "SequenceClassifier", "ShapeError", "UGraph",
    "apply_masks", "ba_generate", "build_dataset", "build_masks",
    "compute_threshold", "cross_entropy", "fit_random_forest", "fit_ridge",
    "full_record", "generate_arch", "generate_true",
    "importance_circumstances", "layer_index", "load_graph", "pearson",
    "prune", "prune_sweep", "r_squared", "retrain_masked",
    "run_random_experiments", "save_graph", "table_from_records", "to_dag",
    "validate", "ws_generate",
]
