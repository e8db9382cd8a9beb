"""Analytic acceptance fixtures and the voxelize throughput benchmark."""

import logging
import math
import traceback
from typing import Callable, List, Optional, Tuple

import numpy as np

from .dataset.manifest import SequenceManifest, Split, dataset_stats
from .events.simulator import FrameSequence, SynthConfig, generate_events
from .events.stream import NS_PER_SECOND, EventStream
from .events.voxel import accumulate_frame, frame_count, voxelize
from .masks.camera import CameraIntrinsics, RigidTransform, project_points
from .masks.raster import BinaryMask, TriangleMesh, dilate_mask, make_dynamic_mask
from .masks.segmentation import SoftMask, bce_loss, mask_iou
from .pose.metrics import foot_skating, head_orientation_error, mpjpe
from .pose.trajectory import HeadPoseSequence, JointTrajectory
from .utils import Timer, time_text


logger = logging.getLogger(__name__)

# events in a default benchmark run
BENCH_EVENTS = 10_000_000

_CHECKS: List[Tuple[str, Callable[[], None]]] = []


def check(func):
    _CHECKS.append((func.__name__, func))
    return func


def _close(value, expected, tol, what):
    if not abs(value - expected) <= tol:
        raise AssertionError(f'{what}: got {value!r}, expected {expected!r} +/- {tol}')


def _rot_z(degrees):
    a = math.radians(degrees)
    return np.array([[math.cos(a), -math.sin(a), 0.0],
                     [math.sin(a), math.cos(a), 0.0],
                     [0.0, 0.0, 1.0]])


@check
def rotation_error_quarter_turn():
    pred = HeadPoseSequence(_rot_z(90)[None], np.zeros((1, 3)))
    _close(head_orientation_error(pred, HeadPoseSequence.identity(1)), 2.0, 1e-9, 'O_head 90 deg')


@check
def rotation_error_half_turn():
    pred = HeadPoseSequence(_rot_z(180)[None], np.zeros((1, 3)))
    _close(head_orientation_error(pred, HeadPoseSequence.identity(1)), math.sqrt(8), 1e-9, 'O_head 180 deg')


@check
def bce_uniform_half():
    gt = BinaryMask(np.eye(8, dtype=bool))
    _close(bce_loss(SoftMask(np.full((8, 8), 0.5)), gt), math.log(2), 1e-6, 'BCE at 0.5')


@check
def bce_perfect_prediction():
    gt = BinaryMask(np.eye(8, dtype=bool))
    loss = bce_loss(SoftMask(gt.bits.astype(float)), gt)
    if not loss <= 2e-7:
        raise AssertionError(f'clamped perfect prediction gave {loss}')


@check
def synth_linear_ramp():
    eps = 1e-3
    i0 = 0.5 - eps
    i1 = 0.5 * math.exp(2.5 * 0.2) - eps
    for frames, sign in (((i0, i1), 1), ((i1, i0), -1)):
        seq = FrameSequence.from_frames([np.full((1, 1), v) for v in frames], [0, 1_000_000])
        stream = generate_events(seq, SynthConfig(c_pos=0.2, c_neg=0.2, eps_log=eps))
        if len(stream) != 2 or set(stream.p.tolist()) != {sign}:
            raise AssertionError(f'ramp gave {list(stream)}')
        _close(int(stream.t[0]), 400_000, 1, 'first crossing')
        _close(int(stream.t[1]), 800_000, 1, 'second crossing')


@check
def synth_constant_frames():
    seq = FrameSequence.from_frames([np.full((4, 4), 0.3)] * 5, [0, 10, 20, 30, 40])
    if len(generate_events(seq)) != 0:
        raise AssertionError('constant frames produced events')


@check
def voxel_frame_count():
    if frame_count(0, 10 ** 8, 30) != 3:
        raise AssertionError('a 0.1 s window at 30 fps must give 3 frames')
    grid = voxelize(EventStream.empty(4, 3, 0, NS_PER_SECOND))
    if grid.values.shape != (30, 3, 3, 4) or grid.values.any():
        raise AssertionError(f'empty 1 s stream gave {grid.values.shape}')


@check
def voxel_bin_split():
    stream = EventStream(2, 1, [1], [0], [25], [1], 0, 100)
    frame = accumulate_frame(stream, 0, 100, 3, 1, 2)
    expected = np.zeros((3, 1, 2), dtype=np.float32)
    expected[0, 0, 1] = expected[1, 0, 1] = 0.5
    if not np.array_equal(frame, expected):
        raise AssertionError(f'midpoint event split as {frame.ravel().tolist()}')


@check
def projection_formula():
    K = CameraIntrinsics(fx=100.0, fy=100.0, cx=320.0, cy=240.0, width=640, height=480)
    proj = project_points([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]], K)
    _close(proj.u[0], 420.0, 1e-12, 'u')
    if proj.valid.tolist() != [True, False]:
        raise AssertionError('point at Z = 0 must be invalid')


@check
def unit_quad_rectangle():
    K = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=64, height=48)
    h = 0.1
    quad = TriangleMesh.from_arrays([[-h, -h, 1.0], [h, -h, 1.0], [h, h, 1.0], [-h, h, 1.0]],
                                    [[0, 1, 2], [0, 2, 3]])
    expected = np.zeros((48, 64), dtype=bool)
    expected[14:34, 22:42] = True
    if make_dynamic_mask(quad, RigidTransform.identity(), K, dilation=0) != BinaryMask(expected):
        raise AssertionError('unit quad did not rasterize to rows 14..33, cols 22..41')
    behind = TriangleMesh.from_arrays(quad.vertices * [1, 1, -1], quad.faces)
    if make_dynamic_mask(behind, None, K).count() != 0:
        raise AssertionError('mesh behind the camera produced pixels')


@check
def dilation_plus_shape():
    bits = np.zeros((5, 5), dtype=bool)
    bits[2, 2] = True
    out = dilate_mask(BinaryMask(bits), 1).bits
    plus = np.zeros((5, 5), dtype=bool)
    plus[2, 1:4] = plus[1:4, 2] = True
    if not np.array_equal(out, plus):
        raise AssertionError('radius-1 dilation of one pixel is not a plus')


@check
def mask_iou_third():
    a = np.zeros((2, 4), dtype=bool)
    b = np.zeros((2, 4), dtype=bool)
    a[:, 0:2] = True
    b[:, 1:3] = True
    _close(mask_iou(BinaryMask(a), BinaryMask(b)), 1 / 3, 1e-12, 'IoU')


@check
def mpjpe_three_four_five():
    gt = JointTrajectory(np.zeros((1, 1, 3)), 30)
    pred = JointTrajectory(np.array([[[3.0, 4.0, 0.0]]]), 30)
    _close(mpjpe(pred, gt), 5.0, 1e-12, 'MPJPE')


@check
def foot_skating_floor_contact():
    positions = np.zeros((2, 1, 3))
    positions[1, 0] = [3.0, 4.0, 0.0]
    _close(foot_skating(JointTrajectory(positions, 30), [0], 50.0, 0.0), 7.0, 1e-12, 'FS')


@check
def dataset_counts():
    manifests = [SequenceManifest(f'seq{i:04d}', Split.train if i < 966 else Split.test, 150, 30,
                                  {'events': '', 'masks': '', 'poses': '', 'meshes': ''})
                 for i in range(1267)]
    stats = dataset_stats(manifests)
    if (stats.n_sequences, stats.n_frames, stats.n_train, stats.n_test) != (1267, 190050, 966, 301):
        raise AssertionError(f'stats {stats}')


def run_selftest() -> List[Tuple[str, Optional[str]]]:
    """Run every fixture; returns (name, None) on success or (name, message)."""
    results = []
    for name, func in _CHECKS:
        try:
            func()
        except Exception as e:
            logger.debug('%s failed\n%s', name, traceback.format_exc())
            results.append((name, f'{type(e).__name__}: {e}'))
        else:
            results.append((name, None))
    return results


def benchmark_stream(n_events: int, width: int = 640, height: int = 480, seed: int = 0) -> EventStream:
    rng = np.random.default_rng(seed)
    t = np.sort(rng.integers(0, NS_PER_SECOND, n_events))
    return EventStream(width, height, rng.integers(0, width, n_events), rng.integers(0, height, n_events),
                       t, rng.choice(np.array([-1, 1], dtype=np.int8), n_events), 0, NS_PER_SECOND)


def run_benchmark(n_events: int = BENCH_EVENTS, fps=30, bins: int = 3) -> float:
    """Single-process voxelize throughput in events/s on a 640x480 sensor."""
    stream = benchmark_stream(n_events)
    timer = Timer()
    voxelize(stream, fps=fps, bins=bins)
    elapsed = timer.t()
    rate = n_events / elapsed if elapsed > 0 else float('inf')
    logger.info('voxelized %d events in %s (%.3e events/s)', n_events, time_text(elapsed), rate)
    return rate
