"""Synthetic events from intensity frames.

Per pixel, a reference log level starts at the first frame. Between two
frames the log intensity is taken as linear in time; every time it climbs
c_pos above the reference a +1 event fires and the reference moves up by
c_pos (likewise -1 / c_neg going down)."""

import logging
from collections import namedtuple
from typing import Sequence, Tuple

import numpy as np

from ..errors import StructuralError, ValidationError
from .stream import EventStream


logger = logging.getLogger(__name__)

MINIMUM_CONTRAST_THRESHOLD = 0.01


class FrameSequence(namedtuple('FrameSequence', ['frames', 'timestamps'])):
    """N x H x W intensities in [0, 1] with strictly increasing ns timestamps."""

    @classmethod
    def from_frames(cls, frames: Sequence[np.ndarray], timestamps: Sequence[int]) -> 'FrameSequence':
        if len(frames) == 0:
            raise StructuralError('a frame sequence needs at least one frame')
        shapes = {np.shape(f) for f in frames}
        if len(shapes) != 1:
            raise StructuralError(f'frames have different shapes: {sorted(shapes)}')
        stack = np.stack([np.asarray(f, dtype=np.float64) for f in frames])
        return cls(frames=stack, timestamps=np.asarray(timestamps, dtype=np.int64))

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def __len__(self):
        return self.frames.shape[0]

    def check(self):
        if self.frames.ndim != 3 or len(self) < 1:
            raise StructuralError(f'frames must be N x H x W with N >= 1, got {self.frames.shape}')
        if len(self.timestamps) != len(self):
            raise StructuralError(f'{len(self.timestamps)} timestamps for {len(self)} frames')
        if len(self) > 1 and not (np.diff(self.timestamps) > 0).all():
            raise ValidationError('frame timestamps must be strictly increasing')
        if not np.isfinite(self.frames).all() or self.frames.min() < 0 or self.frames.max() > 1:
            raise ValidationError('frame intensities must lie in [0, 1]')
        return self


class SynthConfig(namedtuple('SynthConfig',
                             ['c_pos', 'c_neg', 'eps_log', 'refractory_ns', 'threshold_sigma', 'seed'],
                             defaults=(0.2, 0.2, 1e-3, 0, 0.0, 0))):
    """Contrast thresholds are in log units. ``threshold_sigma`` is the
    relative per-pixel threshold jitter (0 disables it)."""

    def check(self):
        if not (self.c_pos > 0 and self.c_neg > 0):
            raise ValidationError(f'contrast thresholds must be positive, got {self.c_pos}, {self.c_neg}')
        if not self.eps_log > 0:
            raise ValidationError(f'eps_log must be positive, got {self.eps_log}')
        if self.refractory_ns < 0:
            raise ValidationError(f'refractory_ns must be >= 0, got {self.refractory_ns}')
        if self.threshold_sigma < 0:
            raise ValidationError(f'threshold_sigma must be >= 0, got {self.threshold_sigma}')
        return self


def log_intensity(frame: np.ndarray, eps_log: float = 1e-3) -> np.ndarray:
    """ln(I + eps_log), elementwise."""
    return np.log(np.asarray(frame, dtype=np.float64) + eps_log)


def jitter_thresholds(cfg: SynthConfig, height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-pixel (c_pos, c_neg) maps. Constant unless threshold_sigma > 0, in
    which case they are drawn once from a generator seeded with cfg.seed."""
    shape = (height, width)
    if cfg.threshold_sigma == 0:
        return np.full(shape, float(cfg.c_pos)), np.full(shape, float(cfg.c_neg))
    rng = np.random.default_rng(cfg.seed)
    c_pos = cfg.c_pos * (1.0 + cfg.threshold_sigma * rng.standard_normal(shape))
    c_neg = cfg.c_neg * (1.0 + cfg.threshold_sigma * rng.standard_normal(shape))
    return (np.maximum(c_pos, MINIMUM_CONTRAST_THRESHOLD),
            np.maximum(c_neg, MINIMUM_CONTRAST_THRESHOLD))


def _crossings(pixels, counts, ref, thresholds, sign):
    """Pixel index and crossed level of every threshold crossing, ordered by
    pixel then crossing rank."""
    idx = np.repeat(pixels, counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    rank = np.arange(len(idx)) - starts + 1
    levels = ref[idx] + sign * rank * thresholds[idx]
    return idx, rank, levels


def generate_events(seq: FrameSequence, cfg: SynthConfig = SynthConfig()) -> EventStream:
    """Simulate an event camera watching ``seq``.

    The output is sorted by time, ties broken by row-major pixel index; its
    window is [timestamps[0], timestamps[-1] + 1)."""
    seq.check()
    cfg.check()
    height, width = seq.height, seq.width
    t_begin = int(seq.timestamps[0])
    t_end = int(seq.timestamps[-1]) + 1
    if len(seq) < 2:
        return EventStream.empty(width, height, t_begin, t_end)

    c_pos, c_neg = (c.ravel() for c in jitter_thresholds(cfg, height, width))
    ref = log_intensity(seq.frames[0], cfg.eps_log).ravel()
    prev = ref.copy()
    last_fired = np.full(height * width, np.iinfo(np.int64).min // 2, dtype=np.int64)

    ts, pix, pol = [], [], []
    for k in range(1, len(seq)):
        ta, tb = int(seq.timestamps[k - 1]), int(seq.timestamps[k])
        cur = log_intensity(seq.frames[k], cfg.eps_log).ravel()
        delta = cur - prev

        for sign, thresholds in ((1, c_pos), (-1, c_neg)):
            moving = sign * delta > 0
            counts = np.zeros(len(ref), dtype=np.int64)
            counts[moving] = np.floor(sign * (cur[moving] - ref[moving]) / thresholds[moving]).clip(min=0)
            pixels = np.flatnonzero(counts)
            if len(pixels) == 0:
                continue
            counts = counts[pixels]
            idx, rank, levels = _crossings(pixels, counts, ref, thresholds, sign)
            frac = (levels - prev[idx]) / delta[idx]
            t = np.rint(ta + frac * (tb - ta)).astype(np.int64).clip(ta, tb)

            if cfg.refractory_ns > 0:
                keep = np.zeros(len(idx), dtype=bool)
                for r in range(1, int(rank.max()) + 1):
                    at_rank = np.flatnonzero(rank == r)
                    ok = t[at_rank] - last_fired[idx[at_rank]] >= cfg.refractory_ns
                    fired = at_rank[ok]
                    keep[fired] = True
                    last_fired[idx[fired]] = t[fired]
                idx, t = idx[keep], t[keep]

            ts.append(t)
            pix.append(idx)
            pol.append(np.full(len(idx), sign, dtype=np.int8))
            ref[pixels] += sign * counts * thresholds[pixels]
        prev = cur

    if not ts:
        return EventStream.empty(width, height, t_begin, t_end)
    t = np.concatenate(ts)
    pixel = np.concatenate(pix)
    p = np.concatenate(pol)
    order = np.lexsort((np.arange(len(t)), pixel, t))
    t, pixel, p = t[order], pixel[order], p[order]
    logger.debug('synthesized %d events from %d frames', len(t), len(seq))
    return EventStream(width, height, pixel % width, pixel // width, t, p, t_begin, t_end)
