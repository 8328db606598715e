#!/usr/bin/env python3
"""Brute-force epsilon sweep fixing the accuracy-drop demo parameters.

Trains the reference softmax model on the seed-7 blobs dataset, sweeps the
L-infinity FGM budget over a grid, and records the measured accuracies plus
the chosen epsilon into fixtures/accuracy_drop.json.  The acceptance suite
replays only the chosen epsilon and asserts the recorded drop still holds.
"""

import json
from pathlib import Path

from aiti.redteam import FgmConfig, evaluate_attack, generate_blobs, new_classifier, train

DATASET = {"seed": 7, "n_per_class": 50, "n_classes": 2, "n_features": 2, "separation": 4.0}
TRAINING = {"learning_rate": 0.5, "epochs": 200, "seed": 7}
GRID = [round(0.05 * i, 2) for i in range(15)]
CHOSEN = 0.5
REQUIRED_DROP = 0.30


def main() -> None:
    dataset = generate_blobs(**DATASET)
    arch = new_classifier((dataset.n_features, dataset.n_classes), name="softmax")
    model = train(arch, dataset, **TRAINING)

    sweep = []
    for epsilon in GRID:
        config = FgmConfig(epsilon=epsilon, norm="inf", clip_range=(0.0, 1.0))
        report = evaluate_attack(model, dataset, config)
        sweep.append(
            {
                "epsilon": epsilon,
                "clean_accuracy": report.clean_accuracy,
                "adversarial_accuracy": report.adversarial_accuracy,
                "success_rate": report.success_rate,
            }
        )
        print(
            f"epsilon={epsilon:5.2f}  clean={report.clean_accuracy:.4f}  "
            f"adversarial={report.adversarial_accuracy:.4f}"
        )

    chosen = next(row for row in sweep if row["epsilon"] == CHOSEN)
    drop = chosen["clean_accuracy"] - chosen["adversarial_accuracy"]
    if drop < REQUIRED_DROP:
        raise SystemExit(f"chosen epsilon {CHOSEN} only drops accuracy by {drop:.4f}")

    out = Path(__file__).resolve().parent.parent / "fixtures" / "accuracy_drop.json"
    out.write_text(
        json.dumps(
            {
                "dataset": DATASET,
                "training": {"arch": "softmax", **TRAINING},
                "attack": {"norm": "inf", "clip_range": [0.0, 1.0]},
                "sweep": sweep,
                "chosen_epsilon": CHOSEN,
                "required_drop": REQUIRED_DROP,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"recorded sweep in {out} (drop at epsilon {CHOSEN}: {drop:.4f})")


if __name__ == "__main__":
    main()
