"""Shared fixtures plus a per-criterion status line for the acceptance suite."""

import numpy as np
import pytest

from ranksentinel import ExpressionMatrix


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion, independent of -v.
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {status}", flush=True)
    elif report.when == "setup" and report.skipped:
        print(f"\n[acceptance] {name}: SKIP", flush=True)


def make_matrix(values, labels, feature_ids=None, sample_ids=None) -> ExpressionMatrix:
    values = np.asarray(values, dtype=float)
    m, n = values.shape
    return ExpressionMatrix(
        feature_ids=tuple(feature_ids) if feature_ids else tuple(f"g{i+1}" for i in range(m)),
        sample_ids=tuple(sample_ids) if sample_ids else tuple(f"s{i+1}" for i in range(n)),
        values=values,
        labels=tuple(labels),
    )


@pytest.fixture
def tiny_matrix():
    """3 features x 4 samples, 2 cases + 2 controls, all positive."""
    return make_matrix(
        [[1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 40.0], [5.0, 5.0, 5.0, 5.0]],
        labels=("case", "case", "control", "control"),
    )
