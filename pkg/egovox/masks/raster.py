"""Dynamic-object masks from posed meshes: project, rasterize, dilate."""

import logging
from collections import namedtuple
from multiprocessing import Pool
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from ..errors import StructuralError, ValidationError
from .camera import DEFAULT_Z_NEAR, CameraIntrinsics, RigidTransform, project_points


logger = logging.getLogger(__name__)

DEFAULT_DILATION = 2

ProjectedMesh = namedtuple('ProjectedMesh', ['triangles', 'valid'])


class TriangleMesh(namedtuple('TriangleMesh', ['vertices', 'faces'])):
    """N x 3 vertices in meters, M x 3 zero-based vertex indices."""

    @classmethod
    def from_arrays(cls, vertices, faces) -> 'TriangleMesh':
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        return cls(vertices=vertices, faces=faces)

    def check(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise StructuralError(f'vertices must be N x 3, got {self.vertices.shape}')
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise StructuralError(f'faces must be M x 3, got {self.faces.shape}')
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise StructuralError(f'face index out of range for {len(self.vertices)} vertices')
        return self


class BinaryMask(namedtuple('BinaryMask', ['bits'])):
    """H x W booleans, True where a dynamic object is."""

    @classmethod
    def empty(cls, height: int, width: int) -> 'BinaryMask':
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, height: int, width: int) -> 'BinaryMask':
        return cls(np.ones((height, width), dtype=bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self):
        return self.bits.shape

    def count(self) -> int:
        return int(self.bits.sum())

    def union(self, other: 'BinaryMask') -> 'BinaryMask':
        if self.shape != other.shape:
            raise StructuralError(f'mask shapes differ: {self.shape} vs {other.shape}')
        return BinaryMask(self.bits | other.bits)

    def __eq__(self, other):
        return isinstance(other, BinaryMask) and np.array_equal(self.bits, other.bits)

    def __ne__(self, other):
        return not self == other

    __hash__ = None


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def rasterize_mask(projected: ProjectedMesh, height: int, width: int) -> BinaryMask:
    """Set every pixel whose center (col + 0.5, row + 0.5) lies inside or on
    the boundary of a valid, non-degenerate triangle."""
    bits = np.zeros((height, width), dtype=bool)
    triangles = np.asarray(projected.triangles, dtype=np.float64).reshape(-1, 3, 2)
    valid = np.asarray(projected.valid, dtype=bool).reshape(-1)
    for tri in triangles[valid]:
        if not np.isfinite(tri).all():
            continue
        (ax, ay), (bx, by), (cx, cy) = tri.tolist()
        area2 = _edge(ax, ay, bx, by, cx, cy)
        if area2 == 0:
            continue
        sign = 1.0 if area2 > 0 else -1.0

        # one pixel of slack around the bounding box; the edge test decides
        c0 = max(int(np.floor(min(ax, bx, cx))) - 1, 0)
        c1 = min(int(np.ceil(max(ax, bx, cx))) + 1, width - 1)
        r0 = max(int(np.floor(min(ay, by, cy))) - 1, 0)
        r1 = min(int(np.ceil(max(ay, by, cy))) + 1, height - 1)
        if c0 > c1 or r0 > r1:
            continue
        px = np.arange(c0, c1 + 1, dtype=np.float64)[None, :] + 0.5
        py = np.arange(r0, r1 + 1, dtype=np.float64)[:, None] + 0.5
        inside = ((sign * _edge(ax, ay, bx, by, px, py) >= 0)
                  & (sign * _edge(bx, by, cx, cy, px, py) >= 0)
                  & (sign * _edge(cx, cy, ax, ay, px, py) >= 0))
        bits[r0:r1 + 1, c0:c1 + 1] |= inside
    return BinaryMask(bits)


def disc(radius) -> np.ndarray:
    """Structuring element: offsets within Euclidean distance <= radius."""
    r = int(np.floor(radius))
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return yy * yy + xx * xx <= radius * radius


def dilate_mask(mask: BinaryMask, radius=DEFAULT_DILATION) -> BinaryMask:
    """Binary dilation with a disc of the given radius; radius 0 is identity."""
    if radius < 0:
        raise ValidationError(f'dilation radius must be >= 0, got {radius}')
    if radius < 1 or not mask.bits.any():
        return BinaryMask(mask.bits.copy())
    return BinaryMask(ndimage.binary_dilation(mask.bits, structure=disc(radius)))


def project_mesh(mesh: TriangleMesh, world_to_camera: RigidTransform, K: CameraIntrinsics,
                 z_near: float = DEFAULT_Z_NEAR) -> ProjectedMesh:
    cam = world_to_camera.apply(mesh.vertices)
    proj = project_points(cam, K, z_near)
    uv = np.stack([proj.u, proj.v], axis=-1)
    return ProjectedMesh(triangles=uv[mesh.faces], valid=proj.valid[mesh.faces].all(axis=1))


def make_dynamic_mask(mesh: TriangleMesh, world_to_camera: Optional[RigidTransform], K: CameraIntrinsics,
                      dilation=DEFAULT_DILATION, z_near: float = DEFAULT_Z_NEAR) -> BinaryMask:
    """Mask of the pixels covered by ``mesh`` as seen by the camera, dilated."""
    mesh.check()
    K.check()
    height, width = K.shape
    if len(mesh.vertices) == 0 or len(mesh.faces) == 0:
        return BinaryMask.empty(height, width)
    if world_to_camera is None:
        world_to_camera = RigidTransform.identity()
    projected = project_mesh(mesh, world_to_camera, K, z_near)
    if not projected.valid.any():
        logger.debug('mesh entirely behind the camera')
        return BinaryMask.empty(height, width)
    return dilate_mask(rasterize_mask(projected, height, width), dilation)


def make_dynamic_masks(meshes: Sequence[TriangleMesh], transforms: Sequence[Optional[RigidTransform]],
                       K: CameraIntrinsics, dilation=DEFAULT_DILATION, z_near: float = DEFAULT_Z_NEAR,
                       jobs: int = 1):
    """One mask per frame; frames are independent and may go to ``jobs`` workers."""
    if len(meshes) != len(transforms):
        raise StructuralError(f'{len(meshes)} meshes for {len(transforms)} camera poses')
    args = [(mesh, T, K, dilation, z_near) for mesh, T in zip(meshes, transforms)]
    if jobs > 1 and len(args) > 1:
        with Pool(jobs) as pool:
            return pool.starmap(make_dynamic_mask, args)
    return [make_dynamic_mask(*a) for a in args]
