"""Event-camera data pipeline and egocentric pose evaluation."""

__version__ = '0.0.1'

from .errors import (
    EgovoxError,
    StructuralError,
    InvalidRangeError,
    OutOfWindowError,
    ValidationError,
    InsufficientFramesError,
    ConfigError,
    FormatError,
    SchemaError,
    FaceIndexError,
)
from .events import EventStream, VoxelGrid, voxelize, generate_events
from .config import PipelineConfig, load_config
from .pipeline import build_pipeline
