"""Nearest-better networks over sampled combinatorial search spaces.

Typical use::

    from nbnet import OneMax, sample_global, build_graph, identify_optima

    S = sample_global(OneMax(32), 2000, seed=1)
    G = build_graph(S, epsilon=0.3)
    report = identify_optima(G, theta=-float("inf"), vartheta=5)
"""
__version__ = "0.1.0"

from .analysis import (EvolutionaryPath, OptimaReport, deception_filter, evolutionary_path,
                       identify_optima, mean_fitness_delta, path_distance, path_maxima,
                       root_of, set_distance)
from .builder import (ProjectionPlan, build_graph, cnbsd, cnbsd_local, cnbsi, cnbsrp,
                      merge_beta, partition_by_domain, required_projections)
from .core import (BetaTable, NbnGraph, SampleSet, Solution, VariableDomain, check_forest,
                   dice_distance, distance, edge_distance, edge_set, hamming_distance,
                   neighborhood)
from .errors import (ConfigurationError, DegenerateTourError, DimensionMismatchError,
                     FormatError, NbnError, ParseError, ProblemMismatchError, ValidationError)
from .io import (LayoutPoint, TrajectoryOverlay, TrajectoryRecord, export_graph,
                 ingest_trajectories, layout_2d, load_graph, load_sampleset, persist_sampleset,
                 save_graph)
from .problems import (BinaryFunction, OneMax, TspInstance, WModel, WModelParams, evaluate,
                       generate_rue, parse_tsplib, read_tsplib, wmodel_evaluate)
from .sampling import SamplerConfig, sample, sample_global, sample_local
from .transition import (TransitionModel, argmax_transition, log_mutation_prob, mutation_prob,
                         selection_prob, severed_network)

__all__ = [
    "argmax_transition",
    "BetaTable",
    "BinaryFunction",
    "build_graph",
    "check_forest",
    "cnbsd",
    "cnbsd_local",
    "cnbsi",
    "cnbsrp",
    "ConfigurationError",
    "deception_filter",
    "DegenerateTourError",
    "dice_distance",
    "DimensionMismatchError",
    "distance",
    "edge_distance",
    "edge_set",
    "evaluate",
    "evolutionary_path",
    "EvolutionaryPath",
    "export_graph",
    "FormatError",
    "generate_rue",
    "hamming_distance",
    "identify_optima",
    "ingest_trajectories",
    "layout_2d",
    "LayoutPoint",
    "load_graph",
    "load_sampleset",
    "log_mutation_prob",
    "mean_fitness_delta",
    "merge_beta",
    "mutation_prob",
    "NbnError",
    "NbnGraph",
    "neighborhood",
    "OneMax",
    "OptimaReport",
    "parse_tsplib",
    "ParseError",
    "partition_by_domain",
    "path_distance",
    "path_maxima",
    "persist_sampleset",
    "ProblemMismatchError",
    "ProjectionPlan",
    "read_tsplib",
    "required_projections",
    "root_of",
    "sample",
    "sample_global",
    "sample_local",
    "SamplerConfig",
    "SampleSet",
    "save_graph",
    "selection_prob",
    "set_distance",
    "severed_network",
    "Solution",
    "TrajectoryOverlay",
    "TrajectoryRecord",
    "TransitionModel",
    "TspInstance",
    "ValidationError",
    "VariableDomain",
    "WModel",
    "wmodel_evaluate",
    "WModelParams",
]
