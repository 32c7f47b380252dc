"""pinnkit: physics-informed neural networks with residual-loss theory.

Trains MLPs on benchmark PDEs (transport, wave, Helmholtz, Klein-Gordon)
and exposes the supporting theory as code: closed-form two-layer
operators, full-row-rank global-minimum certificates, constructive
zero-residual witnesses, and activation-derivative bijectivity metadata.
"""

from .activations import (ACTIVATION_KINDS, MAX_ORDER, ActivationMeta,
                          act_eval, act_eval_batch, bijectivity_report)
from .errors import (ConfigError, ConstructionFailedError, DimensionError,
                     NonFiniteLossError)
from .estimator import PinnRegressor
from .jets import Jet, jet_forward, value_forward
from .network import (LayerStats, MlpParams, forward, init_siren_uniform,
                      init_xavier_normal, load_checkpoint,
                      pre_activation_stats, save_checkpoint)
from .pdes import (Condition, ConditionBatch, OperatorSpec, PdeProblem,
                   PROBLEMS, exact_residual, get_problem, residual_at,
                   sample_collocation, sample_conditions)
from .tape import NodeRef, Tape, backward
from .theory import (Certificate, CertificateTolerances, FkMatrix,
                     FullRankConstruction, construct_full_rank_params,
                     construct_global_minimum, fk_matrix, numerical_rank,
                     operator_coefficient_vector, restricted_hessian_min_eig,
                     theorem1_certificate, two_layer_operator,
                     two_layer_w2_gradient)
from .training import (AdamState, TrainConfig, TrainHistory, adam_init,
                       adam_step, boundary_loss, evaluate_mae,
                       evaluation_grid, lr_at, normalize_problem,
                       normalizer_for, residual_loss, train)

__version__ = "0.1.0"

__all__ = [
    "ACTIVATION_KINDS", "MAX_ORDER", "ActivationMeta", "act_eval",
    "act_eval_batch", "bijectivity_report",
    "ConfigError", "ConstructionFailedError", "DimensionError",
    "NonFiniteLossError",
    "PinnRegressor",
    "Jet", "jet_forward", "value_forward",
    "LayerStats", "MlpParams", "forward", "init_siren_uniform",
    "init_xavier_normal", "load_checkpoint", "pre_activation_stats",
    "save_checkpoint",
    "Condition", "ConditionBatch", "OperatorSpec", "PdeProblem", "PROBLEMS",
    "exact_residual", "get_problem", "residual_at", "sample_collocation",
    "sample_conditions",
    "NodeRef", "Tape", "backward",
    "Certificate", "CertificateTolerances", "FkMatrix",
    "FullRankConstruction", "construct_full_rank_params",
    "construct_global_minimum", "fk_matrix", "numerical_rank",
    "operator_coefficient_vector", "restricted_hessian_min_eig",
    "theorem1_certificate", "two_layer_operator", "two_layer_w2_gradient",
    "AdamState", "TrainConfig", "TrainHistory", "adam_init", "adam_step",
    "boundary_loss", "evaluate_mae", "evaluation_grid", "lr_at",
    "normalize_problem", "normalizer_for", "residual_loss", "train",
    "__version__",
]
