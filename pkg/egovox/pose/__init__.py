from .trajectory import (
    JointTrajectory,
    HeadPoseSequence,
    PoseRecord,
    SMPL_JOINT_NAMES,
    DEFAULT_FOOT_JOINTS,
)
from .metrics import (
    MetricConfig,
    MetricReport,
    HeadReport,
    TABLE_COLUMNS,
    mpjpe,
    head_orientation_error,
    head_translation_error,
    accel_error,
    foot_skating,
    fs_weight,
    evaluate_all,
    evaluate_sequences,
    evaluate_head,
)
