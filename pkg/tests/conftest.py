"""Shared fixtures: paths to the shipped example files."""

from __future__ import annotations

import shutil
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def workdir(tmp_path) -> Path:
    """A scratch directory seeded with every shipped fixture file."""
    for entry in FIXTURES.iterdir():
        shutil.copy(entry, tmp_path / entry.name)
    return tmp_path
