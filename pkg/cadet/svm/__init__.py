"""From-scratch soft-margin SVM: kernels, SMO dual solver, model files."""

from .kernels import KernelKind, KernelSpec, gram_matrix, kernel_eval
from .solver import (
    SolveDiagnostics,
    bias_for,
    dual_objective,
    max_kkt_violation,
    solve_dual,
)
from .model import (
    ClassWeighting,
    SvmModel,
    TrainConfig,
    class_costs,
    discriminant,
    discriminant_matrix,
    train,
)
from .modelfile import format_model, load_svm_model, parse_model, save_svm_model

__all__ = [
    "KernelKind",
    "KernelSpec",
    "kernel_eval",
    "gram_matrix",
    "SolveDiagnostics",
    "solve_dual",
    "dual_objective",
    "max_kkt_violation",
    "bias_for",
    "ClassWeighting",
    "SvmModel",
    "TrainConfig",
    "class_costs",
    "train",
    "discriminant",
    "discriminant_matrix",
    "format_model",
    "parse_model",
    "save_svm_model",
    "load_svm_model",
]
