from .formats import (
    read_events,
    write_events,
    read_voxel_grid,
    write_voxel_grid,
    read_mask,
    write_mask,
    read_frame,
    write_frame,
    read_timestamps,
    write_timestamps,
    read_mesh,
    write_mesh,
    read_poses,
    write_poses,
    read_intrinsics,
    write_intrinsics,
    read_report,
    write_report,
)
from .manifest import (
    Split,
    SequenceManifest,
    DatasetStats,
    dataset_stats,
    read_manifest,
    write_manifest,
    write_manifests,
    load_manifests,
)
