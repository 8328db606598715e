"""Fast Gradient Method perturbation and attack evaluation.

The attack moves an input along the direction of dLoss/dInput, scaled by an
epsilon budget: sign of the gradient for the L-infinity variant, or the L1/L2
normalized gradient otherwise.  Untargeted FGM climbs the true-label loss,
targeted FGM descends the chosen-label loss.
"""

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from aiti.redteam.data import Dataset
from aiti.redteam.network import (
    DifferentiableClassifier,
    _check_input,
    input_gradient,
    predict,
)
from aiti.timestamps import format_timestamp, parse_timestamp, utc_now

NORMS = ("inf", "one", "two")


@dataclass(frozen=True)
class FgmConfig:
    epsilon: float
    norm: str = "inf"
    targeted: bool = False
    target_labels: Optional[tuple] = None
    clip_range: Optional[tuple] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")
        if self.targeted and self.target_labels is None:
            raise ValueError("targeted attacks require target_labels")
        if self.target_labels is not None:
            object.__setattr__(self, "target_labels", tuple(int(t) for t in self.target_labels))
        if self.clip_range is not None:
            lo, hi = (float(v) for v in self.clip_range)
            if not lo < hi:
                raise ValueError("clip_range must satisfy lo < hi")
            object.__setattr__(self, "clip_range", (lo, hi))


def fgm_perturb(model: DifferentiableClassifier, x, y_or_target: int, config: FgmConfig) -> np.ndarray:
    """Single-step FGM perturbation of one input vector.

    Untargeted: x' = x + eps * dir(g);  targeted: x' = x - eps * dir(g),
    where g = dLoss(x, label)/dx.  A zero gradient leaves x unchanged
    (sign(0) = 0 per coordinate for the inf norm).  epsilon = 0 returns x
    bit-identically, before any clipping.
    """
    x = _check_input(model, x)
    if config.epsilon == 0.0:
        return x.copy()
    grad = input_gradient(model, x, y_or_target)
    if config.norm == "inf":
        direction = np.sign(grad)
    else:
        size = np.abs(grad).sum() if config.norm == "one" else np.sqrt((grad**2).sum())
        if size == 0.0:
            return x.copy()
        direction = grad / size
    sign = -1.0 if config.targeted else 1.0
    perturbed = x + sign * config.epsilon * direction
    if config.clip_range is not None:
        np.clip(perturbed, config.clip_range[0], config.clip_range[1], out=perturbed)
    return perturbed


@dataclass(frozen=True)
class VulnerabilityReport:
    """Measured outcome of an attack run against one model/dataset pair."""

    model_name: str
    dataset_name: str
    attack_name: str
    attack_category: str
    hyperparameters: dict
    clean_accuracy: float
    adversarial_accuracy: float
    success_rate: float
    sample_count: int
    created: datetime

    def __post_init__(self):
        for label in ("clean_accuracy", "adversarial_accuracy", "success_rate"):
            value = getattr(self, label)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {value}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        for key in ("epsilon", "norm", "targeted"):
            if key not in self.hyperparameters:
                raise ValueError(f"hyperparameters must include {key!r}")
        self._check_consistency()

    def _check_consistency(self):
        # success_rate must be achievable for some overlap of the
        # correct-before and correct-after sets of this size.
        n = self.sample_count
        before = self.clean_accuracy * n
        after = self.adversarial_accuracy * n
        if before == 0:
            if self.success_rate != 0.0:
                raise ValueError("success_rate must be 0 when nothing was correct before")
            return
        both_max = min(before, after)
        both_min = max(0.0, before + after - n)
        lo = (before - both_max) / before
        hi = (before - both_min) / before
        if not lo - 1e-9 <= self.success_rate <= hi + 1e-9:
            raise ValueError(
                f"success_rate {self.success_rate} inconsistent with accuracies "
                f"{self.clean_accuracy}/{self.adversarial_accuracy} over {n} samples"
            )


def evaluate_attack(
    model: DifferentiableClassifier,
    dataset: Dataset,
    config: FgmConfig,
    clock: Callable[[], datetime] = utc_now,
) -> VulnerabilityReport:
    """Perturb every sample and measure the accuracy the attack costs.

    success_rate = fraction of originally-correct samples that the attack
    flips to an incorrect prediction (0 when nothing was correct to begin
    with).  Targeted mode consumes config.target_labels positionally; a
    length mismatch is an error, never a silent truncation.
    """
    if dataset.n_features != model.in_width:
        raise ValueError("dataset width does not match model input width")
    targets = None
    if config.targeted:
        targets = config.target_labels
        if targets is None or len(targets) != dataset.n_samples:
            raise ValueError(
                f"targeted attack needs one target per sample "
                f"({dataset.n_samples}), got {0 if targets is None else len(targets)}"
            )
        for t in targets:
            if not 0 <= t < model.n_classes:
                raise ValueError(f"target label {t} outside [0, {model.n_classes})")

    clean_correct = 0
    both_correct = 0
    adv_correct = 0
    for i in range(dataset.n_samples):
        x = dataset.features[i]
        y = int(dataset.labels[i])
        label = targets[i] if config.targeted else y
        clean_ok = predict(model, x) == y
        adv_ok = predict(model, fgm_perturb(model, x, label, config)) == y
        clean_correct += clean_ok
        adv_correct += adv_ok
        both_correct += clean_ok and adv_ok

    n = dataset.n_samples
    success = 0.0 if clean_correct == 0 else (clean_correct - both_correct) / clean_correct
    hyper = {
        "epsilon": float(config.epsilon),
        "norm": config.norm,
        "targeted": config.targeted,
        "clip_range": list(config.clip_range) if config.clip_range is not None else None,
    }
    return VulnerabilityReport(
        model_name=model.name,
        dataset_name=dataset.name,
        attack_name="FGM",
        attack_category="evasion",
        hyperparameters=hyper,
        clean_accuracy=clean_correct / n,
        adversarial_accuracy=adv_correct / n,
        success_rate=success,
        sample_count=n,
        created=clock(),
    )


# ---------------------------------------------------------------------------
# Report file format (timestamps RFC 3339 UTC with Z)
# ---------------------------------------------------------------------------

_REPORT_FIELDS = (
    "model_name",
    "dataset_name",
    "attack_name",
    "attack_category",
    "hyperparameters",
    "clean_accuracy",
    "adversarial_accuracy",
    "success_rate",
    "sample_count",
    "created",
)


def report_to_dict(report: VulnerabilityReport) -> dict:
    doc = {name: getattr(report, name) for name in _REPORT_FIELDS}
    doc["created"] = format_timestamp(report.created)
    return doc


def report_from_dict(doc: dict) -> VulnerabilityReport:
    missing = [name for name in _REPORT_FIELDS if name not in doc]
    if missing:
        raise ValueError(f"report document missing fields: {', '.join(missing)}")
    kwargs = {name: doc[name] for name in _REPORT_FIELDS}
    kwargs["created"] = parse_timestamp(doc["created"])
    kwargs["sample_count"] = int(doc["sample_count"])
    return VulnerabilityReport(**kwargs)


def save_report(report: VulnerabilityReport, path) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_report(path) -> VulnerabilityReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
