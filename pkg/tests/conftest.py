import json
from pathlib import Path

import numpy as np
import pytest

from aiti.redteam import DifferentiableClassifier, Layer
from aiti.timestamps import parse_timestamp

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_acceptance_results = []


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def listing1_text() -> str:
    return (FIXTURES / "listing1.json").read_text(encoding="utf-8")


@pytest.fixture
def listing1_doc(listing1_text) -> dict:
    return json.loads(listing1_text)


@pytest.fixture
def fixed_clock():
    """Clock pinned to the legacy example's timestamp."""
    instant = parse_timestamp("2022-08-11T23:39:03")
    return lambda: instant


@pytest.fixture
def toy_model() -> DifferentiableClassifier:
    """The worked two-feature example: W=[[1,-1],[-1,1]], b=0."""
    return DifferentiableClassifier(
        layers=(Layer(np.array([[1.0, -1.0], [-1.0, 1.0]]), np.zeros(2)),),
        n_classes=2,
        name="toy",
    )


def random_model(rng: np.random.Generator, n_layers=None, max_width=8) -> DifferentiableClassifier:
    """Seeded random 1-2 layer classifier for gradient sweeps."""
    if n_layers is None:
        n_layers = int(rng.integers(1, 3))
    widths = [int(rng.integers(1, max_width + 1)) for _ in range(n_layers + 1)]
    widths[-1] = max(2, widths[-1])
    layers = []
    for i, (w_in, w_out) in enumerate(zip(widths, widths[1:])):
        act = "identity" if i == n_layers - 1 else str(rng.choice(["relu", "tanh"]))
        layers.append(
            Layer(rng.normal(scale=1.0, size=(w_out, w_in)), rng.normal(scale=0.5, size=w_out), act)
        )
    return DifferentiableClassifier(layers=tuple(layers), n_classes=widths[-1], name="random")


# ---------------------------------------------------------------------------
# One PASS/FAIL line per acceptance criterion in the terminal summary
# ---------------------------------------------------------------------------


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance_results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _acceptance_results:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
