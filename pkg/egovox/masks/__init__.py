from .camera import (
    CameraIntrinsics,
    RigidTransform,
    Projection,
    check_rotation,
    project_points,
    backproject_points,
)
from .raster import (
    TriangleMesh,
    BinaryMask,
    ProjectedMesh,
    project_mesh,
    rasterize_mask,
    dilate_mask,
    make_dynamic_mask,
    make_dynamic_masks,
)
from .segmentation import (
    SoftMask,
    MaskedVoxelGrid,
    SegmentationReport,
    apply_mask,
    apply_masks,
    bce_loss,
    threshold_mask,
    mask_iou,
    segmentation_report,
)
