"""Vulnerability-data generation: datasets, classifiers, and FGM attacks."""

from aiti.redteam.data import Dataset, generate_blobs, read_dataset_csv, write_dataset_csv
from aiti.redteam.network import (
    ACTIVATIONS,
    DifferentiableClassifier,
    accuracy,
    Layer,
    TrainingDivergedError,
    cross_entropy_loss,
    finite_difference_gradient,
    forward,
    input_gradient,
    load_model,
    mean_loss,
    new_classifier,
    predict,
    save_model,
    train,
)
from aiti.redteam.attack import (
    NORMS,
    FgmConfig,
    VulnerabilityReport,
    evaluate_attack,
    fgm_perturb,
    load_report,
    report_from_dict,
    report_to_dict,
    save_report,
)

__all__ = [
    "ACTIVATIONS",
    "accuracy",
    "NORMS",
    "Dataset",
    "DifferentiableClassifier",
    "FgmConfig",
    "Layer",
    "TrainingDivergedError",
    "VulnerabilityReport",
    "cross_entropy_loss",
    "evaluate_attack",
    "fgm_perturb",
    "finite_difference_gradient",
    "forward",
    "generate_blobs",
    "input_gradient",
    "load_model",
    "load_report",
    "mean_loss",
    "new_classifier",
    "predict",
    "read_dataset_csv",
    "report_from_dict",
    "report_to_dict",
    "save_model",
    "save_report",
    "train",
    "write_dataset_csv",
]
