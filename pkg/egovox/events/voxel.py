"""Event voxel grids: frame segmentation, bilinear temporal binning and
min-max normalization.

Layout is [T][B][H][W] float32. Accumulation happens in float64 in event
order and is cast once at the end, so a grid does not depend on how frames
were distributed over workers."""

import logging
import math
from collections import namedtuple
from fractions import Fraction
from itertools import starmap
from multiprocessing import Pool
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import OutOfWindowError, StructuralError, ValidationError
from .stream import NS_PER_SECOND, EventStream, ensure_valid, slice_time


logger = logging.getLogger(__name__)

NORM_MODES = ('frame', 'bin', 'grid')
DEFAULT_FPS = 30
DEFAULT_BINS = 3


class VoxelGrid(namedtuple('VoxelGrid', ['values', 'fps', 'normalized', 'norm_mode', 'mask_applied'],
                           defaults=(False, None, False))):
    """T x B x H x W grid of temporally binned polarity."""

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]

    def check(self):
        values = self.values
        if values.ndim != 4 or values.dtype != np.float32:
            raise StructuralError(f'voxel values must be float32 [T][B][H][W], got {values.dtype} {values.shape}')
        if self.bins < 1:
            raise ValidationError('a voxel grid needs at least one bin')
        if not self.fps > 0:
            raise ValidationError(f'fps must be positive, got {self.fps}')
        if self.normalized and values.size and (values.min() < 0 or values.max() > 1):
            raise ValidationError('normalized grid holds values outside [0, 1]')
        return self


def _fps_fraction(fps) -> Fraction:
    fps = Fraction(fps)
    if fps <= 0:
        raise ValidationError(f'fps must be positive, got {float(fps)}')
    return fps


def frame_count(t_begin: int, t_end: int, fps) -> int:
    """ceil((t_end - t_begin) * fps / 1e9), exact."""
    duration = max(int(t_end) - int(t_begin), 0)
    return math.ceil(Fraction(duration) * _fps_fraction(fps) / NS_PER_SECOND)


def frame_boundaries(t_begin: int, t_end: int, fps) -> List[int]:
    """T + 1 boundaries; every frame lasts floor(1e9 / fps) ns except the last,
    which absorbs the remainder up to t_end."""
    n = frame_count(t_begin, t_end, fps)
    if n == 0:
        return []
    delta = math.floor(NS_PER_SECOND / _fps_fraction(fps))
    if delta < 1:
        raise ValidationError(f'fps {fps} gives frames shorter than 1 ns')
    bounds = [int(t_begin) + k * delta for k in range(n)]
    bounds.append(int(t_end))
    return bounds


def frame_window(t_first: int, n_frames: int, fps=DEFAULT_FPS) -> Tuple[int, int]:
    """Window of exactly ``n_frames`` voxel frames starting at ``t_first``.

    The window is [t_first, t_first + n * floor(1e9 / fps)), so frame_count
    returns ``n_frames`` for any n * fps < 1e9."""
    if n_frames < 0:
        raise ValidationError(f'frame count must be >= 0, got {n_frames}')
    delta = math.floor(NS_PER_SECOND / _fps_fraction(fps))
    if delta < 1:
        raise ValidationError(f'fps {fps} gives frames shorter than 1 ns')
    return int(t_first), int(t_first) + n_frames * delta


def segment_stream(stream: EventStream, fps=DEFAULT_FPS) -> List[Tuple[int, EventStream]]:
    """Split a validated stream into frames of the given rate.

    Frame k covers [t_begin + k*delta, t_begin + (k+1)*delta); the union of
    the returned slices is the stream."""
    bounds = frame_boundaries(stream.t_begin, stream.t_end, fps)
    return [(k, slice_time(stream, bounds[k], bounds[k + 1])) for k in range(len(bounds) - 1)]


def accumulate_frame(events: EventStream, t_start: int, t_end: int,
                     bins: int, height: int, width: int) -> np.ndarray:
    """Raw B x H x W voxel of one frame.

    Each event lands at bin coordinate t* = (t - t_start) / (t_end - t_start) * (B - 1)
    and splits its polarity between floor(t*) and floor(t*) + 1 with linear
    weights. With B = 1 everything goes to bin 0."""
    if bins < 1:
        raise ValidationError(f'bins must be >= 1, got {bins}')
    cells = bins * height * width
    if len(events) == 0:
        return np.zeros((bins, height, width), dtype=np.float32)

    t = events.t
    if (t < t_start).any() or (t >= t_end).any():
        raise OutOfWindowError(f'events outside frame window [{t_start}, {t_end})')
    if events.x.max() >= width or events.y.max() >= height or events.x.min() < 0 or events.y.min() < 0:
        raise StructuralError(f'events outside a {width}x{height} frame')

    pixel = events.y.astype(np.int64) * width + events.x.astype(np.int64)
    p = events.p.astype(np.float64)
    if bins == 1:
        index, weight = pixel, p
    else:
        tn = (t - t_start) / (t_end - t_start) * (bins - 1)
        lower = np.clip(np.floor(tn).astype(np.int64), 0, bins - 2)
        frac = tn - lower
        plane = height * width
        # interleaved so each cell accumulates in event order
        index = np.empty(2 * len(t), dtype=np.int64)
        weight = np.empty(2 * len(t), dtype=np.float64)
        index[0::2] = lower * plane + pixel
        index[1::2] = (lower + 1) * plane + pixel
        weight[0::2] = p * (1.0 - frac)
        weight[1::2] = p * frac

    acc = np.bincount(index, weights=weight, minlength=cells)
    return acc.reshape(bins, height, width).astype(np.float32)


def _minmax(values: np.ndarray, keep: Optional[np.ndarray]) -> np.ndarray:
    out = np.zeros(values.shape, dtype=np.float32)
    selected = values if keep is None else values[keep]
    if selected.size == 0:
        return out
    lo = float(selected.min())
    hi = float(selected.max())
    if hi == lo:
        return out
    scaled = (values.astype(np.float64) - lo) / (hi - lo)
    if keep is not None:
        scaled[~keep] = 0.0
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return scaled.astype(np.float32)


def _keep_cells(shape, mask) -> Optional[np.ndarray]:
    if mask is None:
        return None
    bits = np.asarray(getattr(mask, 'bits', mask), dtype=bool)
    if bits.shape != shape[-2:]:
        raise StructuralError(f'mask is {bits.shape}, voxel plane is {shape[-2:]}')
    return np.broadcast_to(~bits, shape)


def normalize_frame(frame: np.ndarray, mode: str = 'frame', mask=None) -> np.ndarray:
    """Min-max scale a B x H x W frame into [0, 1].

    ``mode='frame'`` uses one min/max for the whole frame, ``'bin'`` one per
    bin. A constant frame maps to zeros. Cells under ``mask`` are left out of
    the statistics and stay 0."""
    frame = np.asarray(frame)
    if mode == 'frame':
        return _minmax(frame, _keep_cells(frame.shape, mask))
    if mode == 'bin':
        keep = _keep_cells(frame.shape, mask)
        return np.stack([_minmax(frame[b], None if keep is None else keep[b])
                         for b in range(frame.shape[0])])
    raise ValidationError(f'frame normalization mode must be frame or bin, got {mode!r}')


def normalize_grid(values: np.ndarray, mode: str = 'frame',
                   masks: Optional[Sequence] = None) -> np.ndarray:
    """Normalize a T x B x H x W array with one of NORM_MODES.

    ``masks`` holds one entry per frame (None for unmasked frames)."""
    if mode not in NORM_MODES:
        raise ValidationError(f'normalization mode must be one of {NORM_MODES}, got {mode!r}')
    if masks is not None and len(masks) != values.shape[0]:
        raise StructuralError(f'{len(masks)} masks for {values.shape[0]} frames')
    if mode == 'grid':
        keep = None
        if masks is not None and any(m is not None for m in masks):
            keep = np.ones(values.shape, dtype=bool)
            for k, mask in enumerate(masks):
                if mask is not None:
                    keep[k] = _keep_cells(values.shape[1:], mask)
        return _minmax(values, keep)
    out = np.empty(values.shape, dtype=np.float32)
    for k in range(values.shape[0]):
        out[k] = normalize_frame(values[k], mode, None if masks is None else masks[k])
    return out


def voxelize(stream: EventStream, fps=DEFAULT_FPS, bins: int = DEFAULT_BINS,
             normalize: bool = True, norm_mode: str = 'frame', jobs: int = 1) -> VoxelGrid:
    """Convert an event stream into a VoxelGrid (segment, accumulate, normalize).

    Frames may be accumulated by ``jobs`` worker processes; the result is
    bit-identical for any ``jobs``."""
    ensure_valid(stream)
    if bins < 1:
        raise ValidationError(f'bins must be >= 1, got {bins}')
    if norm_mode not in NORM_MODES:
        raise ValidationError(f'normalization mode must be one of {NORM_MODES}, got {norm_mode!r}')

    frames = segment_stream(stream, fps)
    args = [(events, events.t_begin, events.t_end, bins, stream.height, stream.width)
            for _, events in frames]
    logger.debug('voxelizing %d events into %d frames x %d bins', len(stream), len(frames), bins)
    if jobs > 1 and len(args) > 1:
        with Pool(jobs) as pool:
            raw = pool.starmap(accumulate_frame, args)
    else:
        raw = list(starmap(accumulate_frame, args))

    if raw:
        values = np.stack(raw)
    else:
        values = np.zeros((0, bins, stream.height, stream.width), dtype=np.float32)
    if normalize:
        values = normalize_grid(values, norm_mode)
    return VoxelGrid(values=values, fps=fps, normalized=normalize,
                     norm_mode=norm_mode if normalize else None, mask_applied=False)
