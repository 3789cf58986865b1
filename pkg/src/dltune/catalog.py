"""The 24 OpenML classification datasets of the benchmark and their reference profiles.

``sparsity`` is the published zero-cell rate of each dataset (label column
included, factor labels coded from 1). The harness never downloads anything;
``scripts/fetch_openml.py`` places the ARFF files under ``data/openml/``.
"""

from __future__ import annotations

import os
from typing import NamedTuple


class CatalogEntry(NamedTuple):
    name: str
    openml_id: int
    n_features: int
    n_instances: int
    needs_factor_conversion: bool
    sparsity: float


DATASETS = (
    CatalogEntry("bank-marketing", 1461, 16, 45211, True, 0.3101071),
    CatalogEntry("blood-transfusion", 1464, 4, 748, False, 0.001336898),
    CatalogEntry("climate-simulation", 1467, 20, 540, False, 0.0),
    CatalogEntry("credit-g", 31, 20, 1000, True, 0.07585714),
    CatalogEntry("diabetes-37", 37, 8, 768, False, 0.1103877),
    CatalogEntry("tic-tac-toe", 50, 9, 958, True, 0.2066806),
    CatalogEntry("electricity", 151, 8, 45312, False, 0.06653621),
    CatalogEntry("gina-agnostic", 1038, 970, 3469, False, 0.689833),
    CatalogEntry("hill-valley", 1479, 100, 1212, False, 0.004950495),
    CatalogEntry("ilpd", 1480, 10, 583, True, 0.0),
    CatalogEntry("kr-vs-kp", 3, 36, 3196, True, 0.00189426),
    CatalogEntry("madelon", 1485, 500, 2600, False, 7.676954e-07),
    CatalogEntry("monks-problems-1", 333, 6, 556, False, 0.07142857),
    CatalogEntry("monks-problems-2", 334, 6, 601, False, 0.09389113),
    CatalogEntry("monks-problems-3", 335, 6, 554, False, 0.06859206),
    CatalogEntry("mozilla4", 1046, 5, 15545, False, 0.1706229),
    CatalogEntry("musk", 1116, 162, 6598, True, 0.00775547),
    CatalogEntry("nomao", 1486, 118, 34464, False, 0.01575731),
    CatalogEntry("ozone-level-8hr", 1487, 72, 2534, False, 0.01229849),
    CatalogEntry("phoneme", 1489, 5, 5404, False, 0.0),
    CatalogEntry("qsar-biodeg", 1494, 41, 1055, False, 0.4520876),
    CatalogEntry("scene", 312, 296, 2407, False, 0.02767761),
    CatalogEntry("steel-plates-fault", 1504, 33, 1941, False, 0.2011243),
    CatalogEntry("wdbc", 1510, 30, 569, False, 0.004422019),
)

BY_NAME = {d.name: d for d in DATASETS}

DEFAULT_DATA_DIR = os.path.join("data", "openml")


def local_path(name: str, data_dir: str = DEFAULT_DATA_DIR) -> str | None:
    """Path of a fetched copy (``<name>.arff`` or ``<name>.csv``), if present."""
    for ext in ("arff", "csv"):
        p = os.path.join(data_dir, f"{name}.{ext}")
        if os.path.exists(p):
            return p
    return None
