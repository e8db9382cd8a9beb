"""Voxelize, mask and normalize as a pipeline of blocks."""

import abc
import logging
from collections import namedtuple
from typing import List, Optional, Sequence

from .errors import ConfigError, StructuralError
from .events.stream import EventStream
from .events.voxel import VoxelGrid, normalize_grid, voxelize
from .masks.raster import BinaryMask
from .masks.segmentation import apply_masks


logger = logging.getLogger(__name__)

ORDERS = ('mask-then-normalize', 'normalize-then-mask')

PipelineInput = namedtuple('PipelineInput', ['stream', 'grid', 'masks'])
PipelineOutput = namedtuple('PipelineOutput', ['grid', 'masks'])
# a voxel grid on its way through the pipeline, with its per-frame masks
PipelineData = namedtuple('PipelineData', ['grid', 'masks'])


def _frame_masks(masks, frames: int) -> Optional[List[Optional[BinaryMask]]]:
    if masks is None:
        return None
    if isinstance(masks, BinaryMask):
        logger.warning('one mask broadcast over %d frames', frames)
        return [masks] * frames
    masks = list(masks)
    if len(masks) != frames:
        raise StructuralError(f'{len(masks)} masks for {frames} frames')
    return masks


class PipelineBlock(abc.ABC):
    """Base class for voxel pipeline blocks."""

    def __init__(self, params):
        self.params = params

    @abc.abstractmethod
    def __call__(self, input_: PipelineData) -> PipelineData:
        """Apply the block to a grid."""
        raise NotImplementedError


class PipelineEntrypoint(PipelineBlock):
    """Starting point for a pipeline."""

    @abc.abstractmethod
    def __call__(self, input_: PipelineInput) -> PipelineData:
        raise NotImplementedError


class PipelineEndpoint(PipelineBlock):
    """Final point for a pipeline."""

    @abc.abstractmethod
    def __call__(self, input_: PipelineData) -> PipelineOutput:
        raise NotImplementedError


class Pipeline:
    """Blocks applied in order: one entrypoint, any intermediate blocks, one endpoint."""

    def __init__(self, pipeline: List[PipelineBlock]):
        if not pipeline or not isinstance(pipeline[0], PipelineEntrypoint):
            raise ValueError('First block in a pipeline must be PipelineEntrypoint.')
        if not isinstance(pipeline[-1], PipelineEndpoint):
            raise ValueError('Last block in a pipeline must be PipelineEndpoint.')
        for block in pipeline[1:-1]:
            if isinstance(block, (PipelineEntrypoint, PipelineEndpoint)):
                raise ValueError('Intermediate blocks cannot be PipelineEntrypoint or PipelineEndpoint.')
        self.pipeline = pipeline

    def __call__(self, stream: Optional[EventStream] = None, grid: Optional[VoxelGrid] = None,
                 masks=None) -> PipelineOutput:
        data = PipelineInput(stream=stream, grid=grid, masks=masks)
        for transform in self.pipeline:
            data = transform(data)
        return data

    def __repr__(self):
        return ' -> '.join(type(block).__name__ for block in self.pipeline)


class StreamEntrypoint(PipelineEntrypoint):
    """Accumulates an event stream into a raw grid."""

    def __call__(self, input_: PipelineInput) -> PipelineData:
        if input_.stream is None:
            raise ValueError('StreamEntrypoint needs an event stream.')
        grid = voxelize(input_.stream, fps=self.params.fps, bins=self.params.bins,
                        normalize=False, jobs=self.params.jobs)
        return PipelineData(grid=grid, masks=_frame_masks(input_.masks, grid.frames))


class GridEntrypoint(PipelineEntrypoint):
    """Starts from an existing grid, raw or normalized."""

    def __call__(self, input_: PipelineInput) -> PipelineData:
        if input_.grid is None:
            raise ValueError('GridEntrypoint needs a voxel grid.')
        grid = input_.grid.check()
        return PipelineData(grid=grid, masks=_frame_masks(input_.masks, grid.frames))


class MaskBlock(PipelineBlock):
    """Zeroes masked pixels in every bin of their frame."""

    def __call__(self, input_: PipelineData) -> PipelineData:
        if input_.masks is None:
            return input_
        return input_._replace(grid=apply_masks(input_.grid, input_.masks))


class NormalizeBlock(PipelineBlock):
    """Min-max normalizes a raw grid. Once masks went through the grid, masked
    cells stay out of the statistics; already normalized grids pass through."""

    def __call__(self, input_: PipelineData) -> PipelineData:
        grid = input_.grid
        if grid.normalized:
            logger.debug('grid already normalized (%s), skipping', grid.norm_mode)
            return input_
        masks = input_.masks if grid.mask_applied else None
        values = normalize_grid(grid.values, self.params.norm, masks)
        return input_._replace(grid=grid._replace(values=values, normalized=True, norm_mode=self.params.norm))


class GridEndpoint(PipelineEndpoint):

    def __call__(self, input_: PipelineData) -> PipelineOutput:
        return PipelineOutput(grid=input_.grid.check(), masks=input_.masks)


def build_pipeline(params, source: str = 'stream', normalize: bool = True) -> Pipeline:
    """Pipeline for ``source`` ('stream' or 'grid') in the order ``params.order``."""
    if params.order not in ORDERS:
        raise ConfigError(f'order must be one of {ORDERS}, got {params.order!r}')
    entry = {'stream': StreamEntrypoint, 'grid': GridEntrypoint}.get(source)
    if entry is None:
        raise ConfigError(f'unknown pipeline source {source!r}')
    blocks: Sequence[PipelineBlock] = [MaskBlock(params)]
    if normalize:
        if params.order == 'mask-then-normalize':
            blocks = [MaskBlock(params), NormalizeBlock(params)]
        else:
            blocks = [NormalizeBlock(params), MaskBlock(params)]
    pipeline = Pipeline([entry(params), *blocks, GridEndpoint(params)])
    logger.debug('pipeline: %r', pipeline)
    return pipeline
