import numpy as np
import pytest

from npcflow.spaces import Euclidean, Hyperbolic, Product, Spider


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _output_root(tmp_path, monkeypatch):
    # keep every run artifact inside the test's temp dir
    monkeypatch.setenv("NPCFLOW_OUTPUT_ROOT", str(tmp_path / "runs"))


MODEL_SPACES = {
    "euclidean-1": lambda: Euclidean(1),
    "euclidean-2": lambda: Euclidean(2),
    "euclidean-5": lambda: Euclidean(5),
    "hyperbolic-2": lambda: Hyperbolic(2),
    "hyperbolic-3": lambda: Hyperbolic(3),
    "spider-3": lambda: Spider(3),
    "spider-5": lambda: Spider(5),
    "product": lambda: Product(Euclidean(2), Spider(3)),
}
