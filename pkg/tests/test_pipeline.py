import numpy as np
import pytest

from egovox.config import PipelineConfig
from egovox.errors import ConfigError, StructuralError
from egovox.events.voxel import VoxelGrid, voxelize
from egovox.masks.raster import BinaryMask
from egovox.pipeline import (
    GridEndpoint,
    GridEntrypoint,
    MaskBlock,
    NormalizeBlock,
    Pipeline,
    PipelineData,
    build_pipeline,
)

from conftest import random_stream


def test_pipeline_block_order_is_checked():
    cfg = PipelineConfig()
    with pytest.raises(ValueError):
        Pipeline([MaskBlock(cfg), GridEndpoint(cfg)])
    with pytest.raises(ValueError):
        Pipeline([GridEntrypoint(cfg), MaskBlock(cfg)])
    with pytest.raises(ValueError):
        Pipeline([GridEntrypoint(cfg), GridEntrypoint(cfg), GridEndpoint(cfg)])
    assert repr(build_pipeline(cfg)) == 'StreamEntrypoint -> MaskBlock -> NormalizeBlock -> GridEndpoint'


def test_stream_pipeline_matches_voxelize(rng):
    s = random_stream(rng, 400, 8, 6, 0, 10 ** 8)
    out = build_pipeline(PipelineConfig())(stream=s)
    assert out.grid.values.tobytes() == voxelize(s).values.tobytes()
    assert out.masks is None


def test_mask_then_normalize_keeps_masked_cells_zero(rng):
    s = random_stream(rng, 2000, 8, 6, 0, 10 ** 8)
    bits = np.zeros((6, 8), dtype=bool)
    bits[:3] = True
    out = build_pipeline(PipelineConfig())(stream=s, masks=BinaryMask(bits))
    assert out.grid.mask_applied and out.grid.normalized
    assert not out.grid.values[:, :, bits].any()
    for frame in out.grid.values:
        kept = frame[:, ~bits]
        assert kept.min() == 0 and kept.max() == 1


def test_normalize_then_mask(rng):
    s = random_stream(rng, 2000, 8, 6, 0, 10 ** 8)
    bits = np.zeros((6, 8), dtype=bool)
    bits[2, 3] = True
    cfg = PipelineConfig(order='normalize-then-mask')
    out = build_pipeline(cfg)(stream=s, masks=[BinaryMask(bits)] * 3)
    expected = voxelize(s).values.copy()
    expected[:, :, bits] = 0
    assert out.grid.values.tobytes() == expected.tobytes()


def test_grid_source_passes_normalized_grids(rng):
    grid = voxelize(random_stream(rng, 300, 5, 4, 0, 10 ** 8))
    out = build_pipeline(PipelineConfig(), source='grid')(grid=grid, masks=[BinaryMask.empty(4, 5)] * grid.frames)
    assert out.grid.values.tobytes() == grid.values.tobytes()


def test_raw_pipeline(rng):
    s = random_stream(rng, 300, 5, 4, 0, 10 ** 8)
    out = build_pipeline(PipelineConfig(), normalize=False)(stream=s)
    assert not out.grid.normalized
    assert out.grid.values.tobytes() == voxelize(s, normalize=False).values.tobytes()


def test_mask_count_mismatch(rng):
    grid = voxelize(random_stream(rng, 10, 5, 4, 0, 10 ** 8))
    with pytest.raises(StructuralError):
        build_pipeline(PipelineConfig(), source='grid')(grid=grid, masks=[BinaryMask.empty(4, 5)])


def test_bad_source_and_order():
    with pytest.raises(ConfigError):
        build_pipeline(PipelineConfig(), source='frames')
    cfg = PipelineConfig()
    cfg.order = 'sideways'
    with pytest.raises(ConfigError):
        build_pipeline(cfg)


def test_normalize_block_on_raw_grid(rng):
    values = rng.normal(size=(2, 3, 4, 4)).astype(np.float32)
    data = PipelineData(VoxelGrid(values, 30), None)
    out = NormalizeBlock(PipelineConfig(norm='bin'))(data)
    assert out.grid.norm_mode == 'bin'
    assert out.grid.values[0, 1].max() == 1
