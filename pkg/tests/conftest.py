"""Session-scoped pipeline fixtures shared across test modules.

The three bundled recipes are expensive (tens of seconds each), so each
one runs at most once per pytest session and every test reads from the
cached result.  Timing is captured for the runtime budget checks.
"""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path

import pytest

from rulebox.cli import _extract_all, _prepare_matrices
from rulebox.config import RunConfig, load_config
from rulebox.evaluation import build_report

ROOT = Path(__file__).resolve().parent.parent
DERMATOLOGY_CSV = ROOT / "data" / "dermatology.csv"


@dataclasses.dataclass
class PipelineRun:
    cfg: RunConfig
    train_labeled: object
    test_labeled: object
    catalog: object
    matrices: dict
    descriptor: str
    explanations: dict
    params: dict
    train_report: object
    test_report: object
    elapsed: float


def run_recipe(recipe_path: Path) -> PipelineRun:
    cfg = load_config(recipe_path)
    cfg = dataclasses.replace(cfg, dataset=str(ROOT / cfg.dataset))
    start = time.perf_counter()
    train_labeled, test_labeled, catalog, matrices, descriptor = _prepare_matrices(cfg)
    explanations, params = _extract_all(cfg, catalog, matrices, train_labeled, cfg.k)
    train_report = build_report(explanations, train_labeled, "train", descriptor)
    test_report = build_report(explanations, test_labeled, "test", descriptor)
    elapsed = time.perf_counter() - start
    return PipelineRun(cfg, train_labeled, test_labeled, catalog, matrices,
                       descriptor, explanations, params, train_report,
                       test_report, elapsed)


@pytest.fixture(scope="session")
def wine_run() -> PipelineRun:
    return run_recipe(ROOT / "recipes" / "wine.cfg")


@pytest.fixture(scope="session")
def iris_run() -> PipelineRun:
    return run_recipe(ROOT / "recipes" / "iris.cfg")


@pytest.fixture(scope="session")
def synthetic_run() -> PipelineRun:
    return run_recipe(ROOT / "recipes" / "synthetic.cfg")


@pytest.fixture(scope="session")
def dermatology_run() -> PipelineRun:
    if not DERMATOLOGY_CSV.exists():
        pytest.skip(
            "data/dermatology.csv is absent: the UCI dermatology file cannot "
            "be downloaded in this environment. Fetch dermatology.data as "
            "described in scripts/make_datasets.py, convert it, and rerun."
        )
    return run_recipe(ROOT / "recipes" / "dermatology.cfg")
