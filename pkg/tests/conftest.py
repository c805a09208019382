import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def tiny_task():
    """Four samples, two features, linearly separable on feature 0."""
    from frfselect import TaskDataset

    features = np.array(
        [[1.0, 0.2], [0.9, -0.1], [-1.0, 0.1], [-0.8, -0.3]]
    )
    labels = np.array([1, 1, 0, 0])
    freqs = np.array([10.0, 20.0])
    return TaskDataset(features, labels, freqs, "tiny")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # One status line per acceptance criterion, collected by test_acceptance.
    # Read the module instance pytest ran; a fresh import would see an
    # empty RESULT_LINES.
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    lines = getattr(module, "RESULT_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
