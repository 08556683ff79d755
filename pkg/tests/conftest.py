import numpy as np
import pytest

from trafficlens.annotations import ClassMap
from trafficlens.boxes import BoundingBox


@pytest.fixture
def class_map():
    return ClassMap.default()


@pytest.fixture
def rng():
    return np.random.default_rng(20240515)


def random_box(rng, lo=0.0, hi=1000.0, max_size=200.0) -> BoundingBox:
    x = float(rng.uniform(lo, hi))
    y = float(rng.uniform(lo, hi))
    w = float(rng.uniform(0.0, max_size))
    h = float(rng.uniform(0.0, max_size))
    return BoundingBox(x, y, w, h)
