"""Shared fixtures: the two bundled projects, their graphs, and small
random samplers used by the soundness suites."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from specforge.corpus import load_fixture
from specforge.depgraph import analyze_dependencies

REPO_ROOT = Path(__file__).resolve().parents[1]
GOLDEN_DIR = Path(__file__).parent / "goldens"


@pytest.fixture(scope="session")
def user_auth():
    return load_fixture("UserAuth")


@pytest.fixture(scope="session")
def bank():
    return load_fixture("BankAccount")


@pytest.fixture(scope="session")
def ua_graph(user_auth):
    return analyze_dependencies(user_auth)


@pytest.fixture(scope="session")
def bank_graph(bank):
    return analyze_dependencies(bank)


_STRINGS = ["", "a", "b", "1"]


def sample_value(rng: random.Random, col_type: str):
    if col_type == "Int":
        return rng.randint(-3, 3)
    if col_type == "Bool":
        return rng.random() < 0.5
    return rng.choice(_STRINGS)


def sample_tables(rng: random.Random, project, tables, args=None):
    """Random table states; argument values are reused as row values half
    the time so premises that need matching rows actually get hit."""
    arg_pool = [v for v in (args or []) if isinstance(v, (int, str))]
    out = {}
    for t in tables:
        schema = project.table(t)
        rows = []
        for _ in range(rng.randrange(0, 4)):
            row = {}
            for col in schema.columns:
                if arg_pool and rng.random() < 0.5:
                    match = [v for v in arg_pool
                             if (col.colType == "Int") == isinstance(v, int)]
                    if match:
                        row[col.name] = rng.choice(match)
                        continue
                row[col.name] = sample_value(rng, col.colType)
            rows.append(row)
        out[t] = rows
    return out
