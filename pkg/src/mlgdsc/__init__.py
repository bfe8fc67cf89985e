"""Multilayer-graph post-processing for subspace clustering."""

from .clustering import KMeansResult, kmeans
from .datamodel import (
    ClusterAssignment,
    FeatureMatrix,
    LayerStack,
    PipelineConfig,
    RepresentationMatrix,
    SolverParams,
    read_labels,
    read_matrix,
    read_matrix_binary,
    read_matrix_csv,
    write_labels,
    write_matrix_binary,
    write_matrix_csv,
)
from .fusion import joint_embedding, modified_laplacian
from .graphs import affinity_angular, affinity_classic, shifted_laplacian, spectral_basis
from .metrics import accuracy, evaluate, f1_pairwise, nmi, wilcoxon_ranksum
from .oos import assign_oos, fit_oos
from .pipeline import run_benchmark, run_pipeline
from .selfexpress import solve_self_expressive, symmetrize, truncate_ipd
from .synth import SynthSpec, generate

__version__ = "0.1.0"
