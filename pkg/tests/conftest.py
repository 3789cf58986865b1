import importlib.util
import pathlib

import numpy as np
import pytest

from dltune.data_model import ColumnMeta, DataTable

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load_script(name: str):
    spec = importlib.util.spec_from_file_location(name, ROOT / "scripts" / f"{name}.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def numeric_table(values, label: int = -1, name: str = "t") -> DataTable:
    values = np.asarray(values, dtype=float)
    cols = tuple(ColumnMeta(f"c{j}") for j in range(values.shape[1]))
    return DataTable(values, cols, label % values.shape[1], name)


def blobs(n: int = 120, d: int = 4, seed: int = 0, scales=None) -> DataTable:
    """Two Gaussian classes, label 1/2 in the last column."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + 1.5 * y[:, None]
    if scales is not None:
        X = X * np.asarray(scales)
    return numeric_table(np.column_stack([X, y + 1]), name="blobs")


@pytest.fixture(scope="session")
def wdbc_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("openml")
    load_script("export_wdbc").export(str(d / "wdbc.arff"))
    return d


def max_rel_grad_error(loss_fn, params, grads, eps: float = 1e-6) -> float:
    """Worst relative gap between ``grads`` and central differences of ``loss_fn``.

    The denominator is floored at 1e-6 so near-zero gradients compare absolutely.
    """
    worst = 0.0
    for p, g in zip(params, grads):
        for idx in np.ndindex(p.shape):
            keep = p[idx]
            p[idx] = keep + eps
            up = loss_fn(params)
            p[idx] = keep - eps
            down = loss_fn(params)
            p[idx] = keep
            numeric = (up - down) / (2 * eps)
            worst = max(worst, abs(numeric - g[idx]) / max(abs(numeric), abs(g[idx]), 1e-6))
    return worst


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
