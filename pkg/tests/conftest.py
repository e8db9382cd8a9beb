import numpy as np
import pytest

from egovox.events.stream import EventStream
from egovox.masks.camera import CameraIntrinsics
from egovox.masks.raster import TriangleMesh


def random_stream(rng, n, width=16, height=12, t_begin=0, t_end=10 ** 8):
    t = np.sort(rng.integers(t_begin, t_end, n))
    x = rng.integers(0, width, n)
    y = rng.integers(0, height, n)
    p = rng.choice(np.array([-1, 1], dtype=np.int8), n)
    return EventStream(width, height, x, y, t, p, t_begin, t_end)


def unit_quad(half=0.1, z=1.0):
    h = half
    return TriangleMesh.from_arrays([[-h, -h, z], [h, -h, z], [h, h, z], [-h, h, z]],
                                    [[0, 1, 2], [0, 2, 3]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_stream(rng):
    def factory(n=100, width=16, height=12, t_begin=0, t_end=10 ** 8):
        return random_stream(rng, n, width, height, t_begin, t_end)
    return factory


@pytest.fixture
def small_camera():
    return CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
