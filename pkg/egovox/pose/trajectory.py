"""Joint trajectories and head pose sequences (millimeters throughout)."""

from collections import namedtuple
from typing import List, Optional, Sequence

import numpy as np

from ..errors import StructuralError, ValidationError
from ..masks.camera import check_rotation


UP_AXES = ('y', 'z')

SMPL_JOINT_NAMES = (
    'pelvis', 'left_hip', 'right_hip', 'spine1', 'left_knee', 'right_knee',
    'spine2', 'left_ankle', 'right_ankle', 'spine3', 'left_foot', 'right_foot',
    'neck', 'left_collar', 'right_collar', 'head', 'left_shoulder', 'right_shoulder',
    'left_elbow', 'right_elbow', 'left_wrist', 'right_wrist', 'left_hand', 'right_hand',
)
# left/right ankle and left/right foot (toe base)
DEFAULT_FOOT_JOINTS = (7, 8, 10, 11)
FOOT_NAME_KEYS = ('ankle', 'toe', 'foot')


class JointTrajectory(namedtuple('JointTrajectory', ['positions', 'fps', 'up_axis', 'joint_names'],
                                 defaults=('z', None))):
    """T x J x 3 joint positions in millimeters."""

    @property
    def frames(self) -> int:
        return self.positions.shape[0]

    @property
    def joints(self) -> int:
        return self.positions.shape[1]

    @property
    def height_axis(self) -> int:
        return 2 if self.up_axis == 'z' else 1

    @property
    def ground_axes(self):
        return (0, 1) if self.up_axis == 'z' else (0, 2)

    def check(self):
        pos = self.positions
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise StructuralError(f'joint positions must be T x J x 3, got {pos.shape}')
        if pos.shape[0] < 1:
            raise StructuralError('a trajectory needs at least one frame')
        if not np.isfinite(pos).all():
            raise ValidationError('joint positions hold non-finite values')
        if not self.fps > 0:
            raise ValidationError(f'fps must be positive, got {self.fps}')
        if self.up_axis not in UP_AXES:
            raise ValidationError(f'up axis must be one of {UP_AXES}, got {self.up_axis!r}')
        if self.joint_names is not None and len(self.joint_names) != pos.shape[1]:
            raise StructuralError(f'{len(self.joint_names)} joint names for {pos.shape[1]} joints')
        return self

    def foot_joints(self) -> List[int]:
        """Toe/ankle joints: by name when names are known, else the SMPL defaults."""
        if self.joint_names is not None:
            found = [i for i, name in enumerate(self.joint_names)
                     if any(key in name.lower() for key in FOOT_NAME_KEYS)]
            if found:
                return found
        return [j for j in DEFAULT_FOOT_JOINTS if j < self.joints]


class HeadPoseSequence(namedtuple('HeadPoseSequence', ['rotations', 'translations'])):
    """Per-frame head (camera) rotation matrices and translations in millimeters."""

    @classmethod
    def identity(cls, frames: int) -> 'HeadPoseSequence':
        return cls(np.tile(np.eye(3), (frames, 1, 1)), np.zeros((frames, 3)))

    @property
    def frames(self) -> int:
        return self.rotations.shape[0]

    def check(self):
        if self.rotations.ndim != 3 or self.rotations.shape[1:] != (3, 3):
            raise StructuralError(f'head rotations must be T x 3 x 3, got {self.rotations.shape}')
        if self.translations.shape != (self.frames, 3):
            raise StructuralError(f'head translations must be {self.frames} x 3, got {self.translations.shape}')
        if not np.isfinite(self.translations).all():
            raise ValidationError('head translations hold non-finite values')
        for k, R in enumerate(self.rotations):
            try:
                check_rotation(R)
            except ValidationError as e:
                raise ValidationError(f'head rotation {k}: {e}') from None
        return self


PoseRecord = namedtuple('PoseRecord', ['body', 'head'], defaults=(None, None))
