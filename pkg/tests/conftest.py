import numpy as np
import pytest

from ifsproj.fixtures import fixture_ifs
from ifsproj.geometry import SSIFS, Similarity


@pytest.fixture
def sierpinski():
    return fixture_ifs("sierpinski_half")


@pytest.fixture
def cantor():
    return fixture_ifs("cantor_third")


@pytest.fixture
def c4():
    return fixture_ifs("c4_rotation")


@pytest.fixture
def irrational():
    return fixture_ifs("irrational_rotation_planar")


def random_similarity(rng, d=2, ratio_range=(0.2, 0.8)):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    ratio = rng.uniform(*ratio_range)
    return Similarity(ratio, q, rng.normal(size=d))


def random_ssifs(rng, d=2, m=3):
    while True:
        maps = [random_similarity(rng, d) for _ in range(m)]
        try:
            return SSIFS(maps)
        except Exception:
            continue
