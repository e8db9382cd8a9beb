import numpy as np
import pytest

from egovox.errors import OutOfWindowError, ValidationError
from egovox.events.stream import EventStream, drop_pixels
from egovox.events.voxel import (
    VoxelGrid,
    accumulate_frame,
    frame_boundaries,
    frame_count,
    frame_window,
    normalize_frame,
    normalize_grid,
    segment_stream,
    voxelize,
)
from egovox.masks.raster import BinaryMask
from egovox.masks.segmentation import apply_mask

from conftest import random_stream
from oracles import naive_voxelize


def test_frame_count():
    assert frame_count(0, 10 ** 8, 30) == 3
    assert frame_count(0, 10 ** 9, 30) == 30
    assert frame_count(0, 0, 30) == 0
    assert frame_count(5, 6, 30) == 1


def test_frame_boundaries_last_frame_absorbs_remainder():
    bounds = frame_boundaries(0, 10 ** 9, 30)
    assert len(bounds) == 31
    assert bounds[1] == 33_333_333
    assert bounds[-2] == 29 * 33_333_333
    assert bounds[-1] == 10 ** 9


def test_frame_window_holds_one_frame_per_timestamp():
    for fps in (30, 25, 60, 29.97, 1000):
        for n in (0, 1, 2, 5, 150, 1000):
            t0, t1 = frame_window(10 ** 9, n, fps)
            assert t0 == 10 ** 9
            assert frame_count(t0, t1, fps) == n
            assert frame_boundaries(t0, t1, fps)[:-1] == frame_boundaries(t0, t1 + 10 ** 9, fps)[:n]
    assert frame_window(0, 5, 30) == (0, 5 * 33_333_333)
    with pytest.raises(ValidationError):
        frame_window(0, -1, 30)


def test_empty_stream_gives_zero_frames():
    grid = voxelize(EventStream.empty(4, 3, 0, 1_000_000_000))
    assert grid.values.shape == (30, 3, 3, 4)
    assert not grid.values.any()
    assert voxelize(EventStream.empty(4, 3, 0, 0)).values.shape == (0, 3, 3, 4)


def test_segment_stream_covers_every_event(make_stream):
    s = make_stream(1000, t_end=10 ** 8)
    frames = segment_stream(s, 30)
    assert [k for k, _ in frames] == [0, 1, 2]
    assert sum(len(f) for _, f in frames) == len(s)


def test_single_event_bin_split():
    s = EventStream(2, 1, [1], [0], [25], [1], 0, 100)
    frame = accumulate_frame(s, 0, 100, 3, 1, 2)
    assert frame[0, 0, 1] == 0.5 and frame[1, 0, 1] == 0.5 and frame[2, 0, 1] == 0
    assert frame.dtype == np.float32


def test_single_bin_takes_everything():
    s = EventStream(2, 1, [0, 0], [0, 0], [10, 90], [1, 1], 0, 100)
    assert accumulate_frame(s, 0, 100, 1, 1, 2)[0, 0, 0] == 2


def test_event_at_frame_start_lands_in_first_bin():
    s = EventStream(1, 1, [0], [0], [0], [-1], 0, 100)
    frame = accumulate_frame(s, 0, 100, 5, 1, 1)
    assert frame[:, 0, 0].tolist() == [-1, 0, 0, 0, 0]


def test_accumulate_rejects_out_of_window():
    s = EventStream(1, 1, [0], [0], [100], [1], 0, 200)
    with pytest.raises(OutOfWindowError):
        accumulate_frame(s, 0, 100, 3, 1, 1)


def test_voxelize_rejects_invalid_stream():
    with pytest.raises(ValidationError):
        voxelize(EventStream(2, 2, [5], [0], [1], [1], 0, 10))
    with pytest.raises(ValidationError):
        voxelize(EventStream.empty(2, 2, 0, 10), bins=0)


def test_polarity_conservation(rng):
    for _ in range(1000):
        n = int(rng.integers(0, 2000))
        w, h = (int(v) for v in rng.integers(1, 65, 2))
        bins = int(rng.choice([1, 2, 3, 5]))
        s = random_stream(rng, n, w, h, 0, int(rng.integers(1, 2 * 10 ** 8)))
        grid = voxelize(s, fps=30, bins=bins, normalize=False)
        for (_, events), frame in zip(segment_stream(s, 30), grid.values):
            assert abs(float(frame.sum(dtype=np.float64)) - int(events.p.sum())) <= 1e-6 * max(n, 1)


def test_large_stream_conservation(rng):
    s = random_stream(rng, 100_000, 64, 64, 0, 10 ** 8)
    grid = voxelize(s, fps=30, bins=3, normalize=False)
    assert abs(float(grid.values.sum(dtype=np.float64)) - int(s.p.sum())) <= 1e-6 * len(s)


def test_matches_naive_reference(rng):
    for _ in range(200):
        n = int(rng.integers(0, 300))
        w, h = (int(v) for v in rng.integers(1, 17, 2))
        bins = int(rng.choice([1, 2, 3, 5]))
        fps = int(rng.choice([10, 30, 60]))
        t0 = int(rng.integers(0, 10 ** 6))
        s = random_stream(rng, n, w, h, t0, t0 + int(rng.integers(1, 3 * 10 ** 8)))
        got = voxelize(s, fps=fps, bins=bins, normalize=False).values
        want = naive_voxelize(s, fps, bins)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)


@pytest.mark.parametrize('jobs', [4, 8])
def test_parallel_is_bit_identical(rng, jobs):
    s = random_stream(rng, 20_000, 32, 24, 0, 5 * 10 ** 8)
    serial = voxelize(s, fps=30, bins=3, normalize=False).values
    parallel = voxelize(s, fps=30, bins=3, normalize=False, jobs=jobs).values
    assert serial.tobytes() == parallel.tobytes()


def test_masking_commutes_with_voxelize(rng):
    for _ in range(100):
        w, h = (int(v) for v in rng.integers(2, 17, 2))
        s = random_stream(rng, int(rng.integers(0, 500)), w, h, 0, 10 ** 8)
        bits = rng.random((h, w)) < 0.3
        mask = BinaryMask(bits)
        dropped = voxelize(drop_pixels(s, mask), normalize=False).values
        masked = np.stack([apply_mask(f, mask) for f in voxelize(s, normalize=False).values])
        assert dropped.tobytes() == masked.tobytes()


def test_normalize_frame_range(rng):
    frame = rng.normal(size=(3, 5, 6)).astype(np.float32)
    out = normalize_frame(frame)
    assert out.dtype == np.float32
    assert out.min() == 0 and out.max() == 1
    per_bin = normalize_frame(frame, 'bin')
    for b in range(3):
        assert per_bin[b].min() == 0 and per_bin[b].max() == 1


def test_constant_frame_normalizes_to_zero():
    assert not normalize_frame(np.full((3, 2, 2), 4.0, dtype=np.float32)).any()
    assert not normalize_grid(np.zeros((2, 3, 2, 2), dtype=np.float32), 'grid').any()


def test_masked_cells_stay_zero_and_out_of_statistics():
    frame = np.zeros((1, 2, 2), dtype=np.float32)
    frame[0, 0, 0] = 100.0
    frame[0, 1, 1] = 2.0
    mask = np.zeros((2, 2), dtype=bool)
    mask[0, 0] = True
    out = normalize_frame(frame, 'frame', mask)
    assert out[0, 0, 0] == 0
    assert out[0, 1, 1] == 1


def test_grid_mode_uses_global_statistics():
    values = np.zeros((2, 1, 1, 2), dtype=np.float32)
    values[0, 0, 0, 0] = 1.0
    values[1, 0, 0, 0] = 3.0
    out = normalize_grid(values, 'grid')
    assert out[0, 0, 0, 0] == pytest.approx(1 / 3)
    assert out[1, 0, 0, 0] == 1


def test_unknown_normalization_mode():
    with pytest.raises(ValidationError):
        normalize_grid(np.zeros((1, 1, 1, 1), dtype=np.float32), 'pixel')


def test_voxel_grid_check():
    grid = VoxelGrid(np.full((1, 1, 1, 1), 2.0, dtype=np.float32), 30, normalized=True)
    with pytest.raises(ValidationError):
        grid.check()
    assert voxelize(EventStream.empty(1, 1, 0, 10)).check().normalized
