"""Low-rank plus sparse logistic models for undirected networks.

Fits P(edge ij) = sigma(alpha + L_ij + S_ij) with a nuclear-norm penalty on
the positive-semidefinite centered L and an elementwise L1 penalty on the
symmetric sparse S, solved by a three-block ADMM. Ships a synthetic
generator, model-selection tooling, spectral membership clustering, and a
CLI."""

from .kernels import BACKEND
from .model import (AdjacencyMatrix, DiagnosticConfig, Hyperparams,
                    ModelParams, edge_probability, error_metric,
                    log_likelihood, log_likelihood_full_pairs, objective,
                    probability_matrix, regularization_floor,
                    smooth_gradient, strong_convexity_tau)
from .solver import (AdmmState, FitResult, InnerSolveError,
                     consensus_project, fit, prox_L, prox_S, prox_smooth)
from .synthgen import (GroundTruth, ScenarioConfig, generate_ground_truth,
                       preset_for_case, sample_adjacency, scenario_presets)
from .selection import (EvalReport, GridRangeError, SelectionRow,
                        SelectionTable, estimate_K_elbow, evaluate_metrics,
                        grid_search, heuristic_select, information_criteria,
                        numerical_rank, scree_eigenvalues, sparse_support)
from .membership import (Embedding, MembershipResult, cluster_nodes,
                         project_principal, spectral_embedding)
from .netio import (Report, giant_component, load_network, preprocess,
                    read_matrix, top_edges, write_matrix, write_network)

__version__ = "0.1.0"
