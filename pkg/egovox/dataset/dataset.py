import logging
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
import torch
from torch.utils.data import Dataset

from ..errors import StructuralError
from .formats import parse_voxel_header, read_mask, read_voxel_grid, sidecar_path, _read_bytes
from .manifest import SequenceManifest, Split
from .utils import MASK_SUFFIX, list_files


logger = logging.getLogger(__name__)


@lru_cache(maxsize=4)
def _load_values(voxel_path: str) -> np.ndarray:
    return read_voxel_grid(voxel_path).values


class VoxelMaskDataset(Dataset):
    """Per-frame (voxel, mask) pairs of one split.

    Items are ``{'voxel': (B, H, W) float tensor, 'mask': (H, W) float tensor}``;
    sequences without a voxel file are skipped."""

    def __init__(self, manifests: Sequence[SequenceManifest], root='.', split: Optional[Union[Split, str]] = None):
        if isinstance(split, str):
            split = Split(split)
        self.features = []
        skipped = 0
        for m in manifests:
            if split is not None and m.split is not split:
                continue
            voxel_path = m.path('voxels', root)
            if voxel_path is None:
                skipped += 1
                continue
            frames = parse_voxel_header(_read_bytes(sidecar_path(voxel_path)))['shape'][0]
            masks = list_files(m.path('masks', root), MASK_SUFFIX)
            if len(masks) != frames:
                raise StructuralError(f'{m.sequence_id}: {len(masks)} masks for {frames} voxel frames')
            self.features.extend((voxel_path, mask_path, k) for k, mask_path in enumerate(masks))
        if skipped:
            logger.warning('%d sequences have no voxel file and were skipped', skipped)
        logger.info('%s split: %d frames', split.value if split else 'all', len(self.features))

    def __len__(self):
        return len(self.features)

    def __getitem__(self, idx):
        voxel_path, mask_path, k = self.features[idx]
        voxel = torch.from_numpy(np.array(_load_values(voxel_path)[k], dtype=np.float32))
        mask = torch.from_numpy(read_mask(mask_path).bits.astype(np.float32))
        return {'voxel': voxel, 'mask': mask}
