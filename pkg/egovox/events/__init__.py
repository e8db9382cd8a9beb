from .stream import (
    Event,
    EventStream,
    ValidationReport,
    validate_stream,
    ensure_valid,
    slice_time,
    concat_streams,
    drop_pixels,
)
from .voxel import (
    VoxelGrid,
    segment_stream,
    accumulate_frame,
    normalize_frame,
    normalize_grid,
    voxelize,
)
from .simulator import (
    FrameSequence,
    SynthConfig,
    log_intensity,
    jitter_thresholds,
    generate_events,
)
