"""Background extraction on voxel grids and segmentation quality scores."""

import logging
from collections import namedtuple
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import StructuralError, ValidationError
from ..events.voxel import VoxelGrid
from .raster import BinaryMask


logger = logging.getLogger(__name__)

DEFAULT_CLAMP_EPS = 1e-7
DEFAULT_TAU = 0.5

# a VoxelGrid whose mask_applied flag records that masks went through it
MaskedVoxelGrid = VoxelGrid


class SoftMask(namedtuple('SoftMask', ['values'])):
    """H x W predicted probabilities in [0, 1]."""

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def check(self):
        values = self.values
        if values.ndim != 2:
            raise StructuralError(f'soft mask must be H x W, got {values.shape}')
        if values.size and (not np.isfinite(values).all() or values.min() < 0 or values.max() > 1):
            raise ValidationError('soft mask values must lie in [0, 1]')
        return self


def _same_shape(a, b, what='masks'):
    if tuple(a) != tuple(b):
        raise StructuralError(f'{what} differ in size: {tuple(a)} vs {tuple(b)}')


def apply_mask(frame: np.ndarray, mask: BinaryMask) -> np.ndarray:
    """Zero every bin of a B x H x W frame at the mask's set pixels."""
    frame = np.asarray(frame)
    _same_shape(frame.shape[-2:], mask.shape, 'frame and mask')
    out = frame.copy()
    out[:, mask.bits] = 0
    return out


def apply_masks(grid: VoxelGrid, masks: Union[BinaryMask, Sequence[Optional[BinaryMask]]]) -> MaskedVoxelGrid:
    """Mask a whole grid: one mask per frame, or a single mask for all frames.
    ``None`` entries leave their frame untouched."""
    if isinstance(masks, BinaryMask):
        masks = [masks] * grid.frames
    if len(masks) != grid.frames:
        raise StructuralError(f'{len(masks)} masks for {grid.frames} frames')
    values = grid.values.copy()
    for k, mask in enumerate(masks):
        if mask is not None:
            values[k] = apply_mask(values[k], mask)
    return grid._replace(values=values, mask_applied=True)


def bce_loss(pred: SoftMask, gt: BinaryMask, clamp_eps: float = DEFAULT_CLAMP_EPS) -> float:
    """Mean binary cross-entropy over all H*W pixels.

    Predictions are clamped to [clamp_eps, 1 - clamp_eps] first, so
    saturated predictions stay finite."""
    if not 0 < clamp_eps < 0.5:
        raise ValidationError(f'clamp_eps must lie in (0, 0.5), got {clamp_eps}')
    _same_shape(pred.shape, gt.shape)
    p = np.clip(np.asarray(pred.values, dtype=np.float64), clamp_eps, 1.0 - clamp_eps)
    m = gt.bits.astype(np.float64)
    return float(np.mean(-(m * np.log(p) + (1.0 - m) * np.log(1.0 - p))))


def threshold_mask(pred: SoftMask, tau: float = DEFAULT_TAU) -> BinaryMask:
    """Pixel set iff value >= tau."""
    if not 0 <= tau <= 1:
        raise ValidationError(f'tau must lie in [0, 1], got {tau}')
    return BinaryMask(np.asarray(pred.values) >= tau)


def mask_iou(pred: BinaryMask, gt: BinaryMask) -> float:
    """|pred & gt| / |pred | gt|; 1 when both are empty."""
    _same_shape(pred.shape, gt.shape)
    union = int(np.count_nonzero(pred.bits | gt.bits))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(pred.bits & gt.bits)) / union


class SegmentationReport(namedtuple('SegmentationReport', ['bce', 'iou'])):
    """Per-frame BCE and IoU."""

    @property
    def mean_bce(self) -> float:
        return float(np.mean(self.bce)) if len(self.bce) else 0.0

    @property
    def mean_iou(self) -> float:
        return float(np.mean(self.iou)) if len(self.iou) else 0.0

    def to_dict(self):
        return {
            'frames': len(self.bce),
            'mean_bce': self.mean_bce,
            'mean_iou': self.mean_iou,
            'bce': [float(v) for v in self.bce],
            'iou': [float(v) for v in self.iou],
        }


def segmentation_report(preds: Sequence[SoftMask], gts: Sequence[BinaryMask],
                        tau: float = DEFAULT_TAU, clamp_eps: float = DEFAULT_CLAMP_EPS) -> SegmentationReport:
    if len(preds) != len(gts):
        raise StructuralError(f'{len(preds)} predicted masks for {len(gts)} ground-truth masks')
    bce = [bce_loss(p, g, clamp_eps) for p, g in zip(preds, gts)]
    iou = [mask_iou(threshold_mask(p, tau), g) for p, g in zip(preds, gts)]
    return SegmentationReport(bce=tuple(bce), iou=tuple(iou))
