import math

import numpy as np
import pytest

from egovox.errors import StructuralError, ValidationError
from egovox.events.simulator import FrameSequence, SynthConfig, generate_events, jitter_thresholds, log_intensity
from egovox.events.stream import validate_stream

EPS = 1e-3


def ramp(i0, i1, shape=(1, 1), dt=1_000_000):
    return FrameSequence.from_frames([np.full(shape, i0), np.full(shape, i1)], [0, dt])


def test_linear_ramp_two_and_a_half_thresholds():
    i0 = 0.5 - EPS
    i1 = 0.5 * math.exp(0.5) - EPS
    s = generate_events(ramp(i0, i1), SynthConfig(c_pos=0.2, c_neg=0.2, eps_log=EPS))
    assert len(s) == 2
    assert s.p.tolist() == [1, 1]
    assert abs(int(s.t[0]) - 400_000) <= 1
    assert abs(int(s.t[1]) - 800_000) <= 1


def test_mirrored_input_mirrors_polarity(rng):
    frames = [rng.random((6, 5)) * 0.9 + 0.05 for _ in range(4)]
    ts = [0, 1000, 2500, 4000]
    up = generate_events(FrameSequence.from_frames(frames, ts))
    down = generate_events(FrameSequence.from_frames(frames[::-1], ts))
    assert len(up) > 0
    i0 = 0.5 - EPS
    i1 = 0.5 * math.exp(0.5) - EPS
    rising = generate_events(ramp(i0, i1))
    falling = generate_events(ramp(i1, i0))
    assert np.array_equal(rising.t, falling.t)
    assert np.array_equal(rising.p, -falling.p)
    assert validate_stream(up).ok and validate_stream(down).ok


def test_constant_sequence_is_silent():
    seq = FrameSequence.from_frames([np.full((4, 4), 0.3)] * 5, [0, 10, 20, 30, 40])
    assert len(generate_events(seq)) == 0


def test_single_frame_is_silent():
    s = generate_events(FrameSequence.from_frames([np.full((2, 3), 0.7)], [50]))
    assert len(s) == 0
    assert (s.t_begin, s.t_end, s.width, s.height) == (50, 51, 3, 2)


def test_output_is_sorted_and_in_window(rng):
    frames = [rng.random((8, 8)) for _ in range(6)]
    ts = np.cumsum(rng.integers(1, 10 ** 6, 6)).tolist()
    s = generate_events(FrameSequence.from_frames(frames, ts))
    assert validate_stream(s).ok
    assert s.t_begin == ts[0] and s.t_end == ts[-1] + 1
    pixel = s.y.astype(np.int64) * s.width + s.x
    order = np.lexsort((pixel, s.t))
    assert np.array_equal(order, np.arange(len(s)))


def test_net_polarity_tracks_log_change(rng):
    frames = [rng.random((5, 5)) for _ in range(3)]
    s = generate_events(FrameSequence.from_frames(frames, [0, 100, 200]), SynthConfig())
    net = np.zeros((5, 5))
    np.add.at(net, (s.y, s.x), s.p)
    change = log_intensity(frames[-1], EPS) - log_intensity(frames[0], EPS)
    assert (np.abs(change - 0.2 * net) < 0.2 + 1e-9).all()


def test_refractory_period_suppresses_close_events():
    i0 = 0.5 - EPS
    i1 = 0.5 * math.exp(0.5) - EPS
    s = generate_events(ramp(i0, i1), SynthConfig(refractory_ns=500_000))
    assert len(s) == 1
    assert abs(int(s.t[0]) - 400_000) <= 1


def test_threshold_jitter_is_seeded():
    cfg = SynthConfig(threshold_sigma=0.1, seed=7)
    a = jitter_thresholds(cfg, 4, 5)
    b = jitter_thresholds(cfg, 4, 5)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[0], jitter_thresholds(cfg._replace(seed=8), 4, 5)[0])
    flat = jitter_thresholds(SynthConfig(), 2, 2)[0]
    assert (flat == 0.2).all()


@pytest.mark.parametrize('frames, ts, error', [
    ([np.zeros((2, 2)), np.zeros((3, 2))], [0, 1], StructuralError),
    ([np.zeros((2, 2)), np.zeros((2, 2))], [5, 5], ValidationError),
    ([np.full((2, 2), 1.5)], [0], ValidationError),
])
def test_bad_sequences(frames, ts, error):
    with pytest.raises(error):
        generate_events(FrameSequence.from_frames(frames, ts))


def test_bad_config():
    seq = FrameSequence.from_frames([np.zeros((1, 1))], [0])
    with pytest.raises(ValidationError):
        generate_events(seq, SynthConfig(c_pos=0))
