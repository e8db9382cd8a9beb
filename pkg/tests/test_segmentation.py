import math

import numpy as np
import pytest
import torch

from egovox.errors import StructuralError, ValidationError
from egovox.events.voxel import VoxelGrid
from egovox.masks.loss import ClampedBCELoss, bce_loss_torch
from egovox.masks.raster import BinaryMask
from egovox.masks.segmentation import (
    SoftMask,
    apply_mask,
    apply_masks,
    bce_loss,
    mask_iou,
    segmentation_report,
    threshold_mask,
)

from oracles import naive_bce


def test_bce_uniform_half():
    gt = BinaryMask(np.eye(8, dtype=bool))
    assert abs(bce_loss(SoftMask(np.full((8, 8), 0.5)), gt) - math.log(2)) <= 1e-6


def test_bce_perfect_prediction_is_clamped():
    gt = BinaryMask(np.eye(8, dtype=bool))
    loss = bce_loss(SoftMask(gt.bits.astype(float)), gt)
    assert 0 < loss <= 2e-7


def test_bce_saturated_wrong_prediction_is_finite():
    gt = BinaryMask(np.eye(4, dtype=bool))
    loss = bce_loss(SoftMask(1.0 - gt.bits.astype(float)), gt)
    assert math.isfinite(loss)
    assert loss == pytest.approx(-math.log(1e-7), rel=1e-6)


def test_bce_matches_direct_sum(rng):
    for _ in range(100):
        pred = rng.random((8, 8))
        gt = rng.random((8, 8)) < 0.5
        assert abs(bce_loss(SoftMask(pred), BinaryMask(gt)) - naive_bce(pred, gt, 1e-7)) <= 1e-9


def test_bce_shape_and_clamp_checks():
    with pytest.raises(StructuralError):
        bce_loss(SoftMask(np.zeros((2, 2))), BinaryMask.empty(2, 3))
    with pytest.raises(ValidationError):
        bce_loss(SoftMask(np.zeros((2, 2))), BinaryMask.empty(2, 2), clamp_eps=0.5)


def test_torch_loss_matches(rng):
    pred = rng.random((8, 8))
    gt = rng.random((8, 8)) < 0.5
    expected = bce_loss(SoftMask(pred), BinaryMask(gt))
    assert bce_loss_torch(pred, gt) == pytest.approx(expected, abs=1e-9)
    loss = ClampedBCELoss()(torch.tensor(pred, requires_grad=True), torch.tensor(gt))
    assert loss.item() == pytest.approx(expected, abs=1e-9)
    loss.backward()


def test_iou_third():
    a = np.zeros((2, 4), dtype=bool)
    b = np.zeros((2, 4), dtype=bool)
    a[:, 0:2] = True
    b[:, 1:3] = True
    assert mask_iou(BinaryMask(a), BinaryMask(b)) == pytest.approx(1 / 3, abs=1e-12)


def test_iou_of_empty_masks_is_one():
    assert mask_iou(BinaryMask.empty(3, 3), BinaryMask.empty(3, 3)) == 1.0
    assert mask_iou(BinaryMask.empty(3, 3), BinaryMask.full(3, 3)) == 0.0


def test_threshold_is_inclusive():
    pred = SoftMask(np.array([[0.49, 0.5, 0.51]]))
    assert threshold_mask(pred, 0.5).bits.tolist() == [[False, True, True]]
    with pytest.raises(ValidationError):
        threshold_mask(pred, 1.5)


def test_apply_mask_zeroes_every_bin(rng):
    frame = rng.normal(size=(3, 4, 5)).astype(np.float32)
    bits = rng.random((4, 5)) < 0.4
    out = apply_mask(frame, BinaryMask(bits))
    assert not out[:, bits].any()
    assert np.array_equal(out[:, ~bits], frame[:, ~bits])
    assert frame[:, bits].any()


def test_apply_mask_idempotent_and_composes(rng):
    for _ in range(100):
        frame = rng.normal(size=(2, 6, 7)).astype(np.float32)
        a = BinaryMask(rng.random((6, 7)) < 0.3)
        b = BinaryMask(rng.random((6, 7)) < 0.3)
        once = apply_mask(frame, a)
        assert once.tobytes() == apply_mask(once, a).tobytes()
        assert apply_mask(apply_mask(frame, a), b).tobytes() == apply_mask(frame, a.union(b)).tobytes()


def test_empty_mask_is_identity(rng):
    frame = rng.normal(size=(3, 4, 4)).astype(np.float32)
    assert apply_mask(frame, BinaryMask.empty(4, 4)).tobytes() == frame.tobytes()


def test_apply_masks_per_frame(rng):
    grid = VoxelGrid(rng.random((3, 2, 4, 4)).astype(np.float32), 30)
    masks = [BinaryMask.full(4, 4), None, BinaryMask.empty(4, 4)]
    out = apply_masks(grid, masks)
    assert out.mask_applied and not grid.mask_applied
    assert not out.values[0].any()
    assert np.array_equal(out.values[1:], grid.values[1:])
    broadcast = apply_masks(grid, BinaryMask.full(4, 4))
    assert not broadcast.values.any()
    with pytest.raises(StructuralError):
        apply_masks(grid, masks[:2])


def test_segmentation_report():
    gt = [BinaryMask(np.eye(4, dtype=bool)), BinaryMask.empty(4, 4)]
    preds = [SoftMask(np.eye(4)), SoftMask(np.full((4, 4), 0.5))]
    report = segmentation_report(preds, gt)
    assert report.iou == (1.0, 0.0)
    assert report.bce[1] == pytest.approx(math.log(2), abs=1e-6)
    assert report.mean_iou == 0.5
    assert report.to_dict()['frames'] == 2
    with pytest.raises(StructuralError):
        segmentation_report(preds, gt[:1])
