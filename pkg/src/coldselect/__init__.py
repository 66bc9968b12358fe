"""Deterministic cold-start data selection over precomputed embeddings and
class-probability matrices: prior-calibrated uncertainty, kernel propagation
over an exact kNN graph, and budget-sized partition with iterative
margin-penalized re-selection."""

from .calibration import (
    CalibratedLabels,
    HyperParams,
    PriorVector,
    SupportSet,
    build_support_set,
    calibrate,
    contextual_prior,
    entropy,
)
from .dataio import (
    DatasetMatrices,
    Manifest,
    SelectionOutput,
    load_dataset,
    load_manifest,
    load_selection,
    write_dataset,
    write_selection,
)
from .metrics import (
    SelectionReport,
    diversity,
    imbalance,
    label_divergence,
    representativeness,
)
from .partition import Partition, SelectionState, init_selection, kmeans
from .propagation import KnnGraph, UncertaintyVectors, knn_graph, propagate, rbf_kernel
from .rewrite import CrossKnn, cross_knn, rewrite_step, run_ptr
from .synthgen import SynthSpec, generate

__version__ = "0.1.0"
