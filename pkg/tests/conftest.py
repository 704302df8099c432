import numpy as np
import pytest

from zone.config import PipelineConfig
from zone.fixtures import FixtureSpec, generate_fixture
from zone.pipeline import run_edit


@pytest.fixture(scope="session")
def case_dir(tmp_path_factory):
    """One shared 512x512 fixture case (64x64 square edit, seed 7)."""
    root = tmp_path_factory.mktemp("case")
    generate_fixture(root, FixtureSpec(seed=7))
    return root


@pytest.fixture(scope="session")
def edited_out(tmp_path_factory, case_dir):
    """The shared case run once through the full pipeline."""
    out = tmp_path_factory.mktemp("edited")
    report = run_edit(case_dir / "manifest.json", PipelineConfig(), out)
    return out, report


def random_rgb(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
