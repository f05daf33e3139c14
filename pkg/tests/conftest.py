import os

import pytest

from palette_forge import colorspace

CACHE_DIR = os.path.join(os.path.dirname(__file__), ".cache")


@pytest.fixture(scope="session")
def table_40_90():
    return colorspace.load_or_build(40.0, 90.0, cache_dir=CACHE_DIR)


@pytest.fixture(scope="session")
def table_0_100():
    return colorspace.load_or_build(0.0, 100.0, cache_dir=CACHE_DIR)
