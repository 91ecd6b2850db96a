import os
from pathlib import Path

import numpy as np
import pytest

from gadget_svm.core import SparseVector
from gadget_svm.dataio import Dataset, LabeledInstance, load_dataset

REPO = Path(__file__).resolve().parent.parent


def data_dir() -> Path:
    return Path(os.environ.get("GADGET_DATA_DIR", REPO / "data"))


def benchmark_files(name: str):
    """(train, test) paths for a benchmark under the data directory, or None."""
    base = data_dir() / name
    train, test = base / f"{name}.train", base / f"{name}.test"
    if train.is_file() and test.is_file():
        return train, test
    return None


def make_dataset(rows, dim=None) -> Dataset:
    """Dataset from ``(dense_x, y)`` pairs."""
    dim = dim or len(rows[0][0])
    return Dataset([LabeledInstance(SparseVector.from_dense(x), y) for x, y in rows], dim)


def margin_toy(n=200, margin=0.5, seed=0) -> Dataset:
    """2-feature set separated by the first coordinate with a gap of ``margin``."""
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < n:
        x = rng.uniform(-2.0, 2.0, size=2)
        if abs(x[0]) >= margin:
            rows.append((x, 1 if x[0] > 0 else -1))
    return make_dataset(rows)


def random_dataset(rng, n, dim, density=0.5) -> Dataset:
    rows = []
    for _ in range(n):
        x = rng.normal(size=dim) * (rng.random(dim) < density)
        rows.append((x, int(rng.choice([-1, 1]))))
    return make_dataset(rows, dim)


@pytest.fixture(scope="session")
def adult():
    files = benchmark_files("adult")
    if files is None:
        pytest.skip("Adult data not found under the data directory")
    train = load_dataset(files[0])
    test = load_dataset(files[1], dim=train.dim)
    return train, test


@pytest.fixture
def toy():
    return margin_toy()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
