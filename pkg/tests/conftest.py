from __future__ import annotations

import os

import pytest

PARIS_ENV = "STREETFLOCK_PARIS_RAW"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "paris: full-scale checks that need a user-supplied Paris extract"
    )


@pytest.fixture
def paris_raw_path():
    default = os.path.join(os.path.dirname(__file__), "..", "data", "paris_raw.txt")
    path = os.environ.get(PARIS_ENV, default)
    if not os.path.exists(path):
        pytest.skip(f"Paris extract not available (set {PARIS_ENV} or add data/paris_raw.txt)")
    return path
