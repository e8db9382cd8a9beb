"""Pinhole camera model (OpenCV convention: x right, y down, z forward)."""

from collections import namedtuple

import numpy as np

from ..errors import StructuralError, ValidationError


ROTATION_TOLERANCE = 1e-6
DEFAULT_Z_NEAR = 1e-4

Projection = namedtuple('Projection', ['u', 'v', 'depth', 'valid'])


def check_rotation(R, tol: float = ROTATION_TOLERANCE) -> np.ndarray:
    """Return R as a float array if it is a proper rotation, else raise."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise StructuralError(f'rotation must be 3x3, got {R.shape}')
    if not np.isfinite(R).all():
        raise ValidationError('rotation holds non-finite values')
    if np.linalg.norm(R.T @ R - np.eye(3)) > tol:
        raise ValidationError('rotation is not orthonormal')
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise ValidationError('rotation determinant is not +1')
    return R


class CameraIntrinsics(namedtuple('CameraIntrinsics', ['fx', 'fy', 'cx', 'cy', 'width', 'height'])):
    """Focal lengths and principal point in pixels, sensor size in pixels."""

    def check(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValidationError(f'focal lengths must be positive, got {self.fx}, {self.fy}')
        if not (self.width > 0 and self.height > 0):
            raise ValidationError(f'sensor size must be positive, got {self.width}x{self.height}')
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValidationError(f'principal point ({self.cx}, {self.cy}) outside the sensor')
        return self

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def shape(self):
        return (int(self.height), int(self.width))


class RigidTransform:
    """x' = R x + t with R a proper rotation; translation in meters."""

    def __init__(self, rotation, translation):
        self.rotation = check_rotation(rotation)
        self.translation = np.asarray(translation, dtype=np.float64).reshape(-1)
        if self.translation.shape != (3,):
            raise StructuralError(f'translation must be a 3-vector, got {self.translation.shape}')

    @classmethod
    def identity(cls) -> 'RigidTransform':
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_head_pose(cls, rotation, translation_mm) -> 'RigidTransform':
        """World-to-camera transform of a head-mounted camera whose pose in the
        world (camera-to-world, millimeters) is given."""
        R = check_rotation(rotation)
        t = np.asarray(translation_mm, dtype=np.float64) / 1000.0
        return cls(R.T, -R.T @ t)

    def apply(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> 'RigidTransform':
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, other: 'RigidTransform') -> 'RigidTransform':
        """self after other."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def __repr__(self):
        return f'RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})'


def project_points(points, K: CameraIntrinsics, z_near: float = DEFAULT_Z_NEAR) -> Projection:
    """Project N x 3 camera-frame points (meters) to pixels.

    Points with Z <= z_near are flagged invalid and get NaN pixel coordinates."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    X, Y, Z = points[:, 0], points[:, 1], points[:, 2]
    valid = Z > z_near
    u = np.full(len(points), np.nan)
    v = np.full(len(points), np.nan)
    u[valid] = K.fx * X[valid] / Z[valid] + K.cx
    v[valid] = K.fy * Y[valid] / Z[valid] + K.cy
    return Projection(u=u, v=v, depth=Z.copy(), valid=valid)


def backproject_points(u, v, depth, K: CameraIntrinsics) -> np.ndarray:
    """Inverse of project_points for valid points."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    X = (u - K.cx) / K.fx * depth
    Y = (v - K.cy) / K.fy * depth
    return np.stack([X, Y, depth], axis=-1)
