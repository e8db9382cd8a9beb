import torch
from torch import nn

from .segmentation import DEFAULT_CLAMP_EPS


class ClampedBCELoss(nn.BCELoss):
    """BCE over predicted masks with predictions clamped to
    [clamp_eps, 1 - clamp_eps]; the value matches segmentation.bce_loss."""

    def __init__(self, clamp_eps: float = DEFAULT_CLAMP_EPS):
        super(ClampedBCELoss, self).__init__(reduction='mean')
        self.clamp_eps = clamp_eps

    def forward(self, pred, target):
        pred = pred.clamp(self.clamp_eps, 1.0 - self.clamp_eps)
        return super(ClampedBCELoss, self).forward(pred, target.to(pred.dtype))


def bce_loss_torch(pred, target, clamp_eps: float = DEFAULT_CLAMP_EPS) -> float:
    """bce_loss on arrays, computed in float64 through ClampedBCELoss."""
    pred = torch.as_tensor(pred, dtype=torch.float64)
    target = torch.as_tensor(target, dtype=torch.float64)
    with torch.no_grad():
        return ClampedBCELoss(clamp_eps)(pred, target).item()
