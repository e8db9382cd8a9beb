"""Egocentric pose evaluation: MPJPE, head orientation/translation error,
acceleration error and foot skating.

Every metric is built from per-sample terms so that several sequences can be
pooled (mean over the concatenated frames) as well as reported one by one."""

import logging
from collections import OrderedDict, namedtuple
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import InsufficientFramesError, StructuralError, ValidationError
from .trajectory import HeadPoseSequence, JointTrajectory, PoseRecord


logger = logging.getLogger(__name__)

DEFAULT_FS_THRESH_MM = 50.0
DEFAULT_FLOOR_MM = 0.0

# (table header, report field, unit)
TABLE_COLUMNS = (
    ('O_head', 'o_head', ''),
    ('T_head', 't_head_mm', 'mm'),
    ('MPJPE', 'mpjpe_mm', 'mm'),
    ('Accel', 'accel_mm_s2', 'mm/s^2'),
    ('FS', 'fs_mm', 'mm'),
)

MetricConfig = namedtuple('MetricConfig', ['foot_joints', 'fs_thresh_mm', 'floor_mm'],
                          defaults=(None, DEFAULT_FS_THRESH_MM, DEFAULT_FLOOR_MM))


def _check_body_pair(pred: JointTrajectory, gt: JointTrajectory):
    pred.check()
    gt.check()
    if pred.positions.shape != gt.positions.shape:
        raise StructuralError(f'trajectory shapes differ: {pred.positions.shape} vs {gt.positions.shape}')


def _check_head_pair(pred: HeadPoseSequence, gt: HeadPoseSequence):
    pred.check()
    gt.check()
    if pred.frames != gt.frames:
        raise StructuralError(f'head sequences differ in length: {pred.frames} vs {gt.frames}')


# per-sample terms

def joint_errors(pred: JointTrajectory, gt: JointTrajectory) -> np.ndarray:
    """T x J Euclidean joint distances."""
    _check_body_pair(pred, gt)
    return np.linalg.norm(pred.positions - gt.positions, axis=-1)


def orientation_errors(pred: HeadPoseSequence, gt: HeadPoseSequence) -> np.ndarray:
    """Per-frame ||R_pred R_gt^T - I||_F (a rotation's inverse is its transpose)."""
    _check_head_pair(pred, gt)
    diff = np.einsum('tij,tkj->tik', pred.rotations, gt.rotations) - np.eye(3)
    return np.sqrt(np.sum(diff * diff, axis=(1, 2)))


def translation_errors(pred: HeadPoseSequence, gt: HeadPoseSequence) -> np.ndarray:
    _check_head_pair(pred, gt)
    return np.linalg.norm(pred.translations - gt.translations, axis=-1)


def acceleration(traj: JointTrajectory) -> np.ndarray:
    """Central second difference, (T - 2) x J x 3, in mm/s^2."""
    x = traj.positions
    return (x[2:] - 2.0 * x[1:-1] + x[:-2]) * (traj.fps ** 2)


def accel_errors(pred: JointTrajectory, gt: JointTrajectory) -> np.ndarray:
    """(T - 2) x J acceleration differences."""
    _check_body_pair(pred, gt)
    if pred.fps != gt.fps:
        raise StructuralError(f'trajectories differ in fps: {pred.fps} vs {gt.fps}')
    if pred.frames < 3:
        raise InsufficientFramesError(f'acceleration needs at least 3 frames, got {pred.frames}')
    return np.linalg.norm(acceleration(pred) - acceleration(gt), axis=-1)


def fs_weight(h, h_thresh: float = DEFAULT_FS_THRESH_MM):
    """2 - 2^(h / h_thresh); heights below the floor count as floor contact."""
    h = np.maximum(np.asarray(h, dtype=np.float64), 0.0)
    return 2.0 - np.power(2.0, h / h_thresh)


def foot_skating_terms(traj: JointTrajectory, foot_joints: Optional[Sequence[int]] = None,
                       h_thresh: float = DEFAULT_FS_THRESH_MM,
                       floor_height: float = DEFAULT_FLOOR_MM) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted planar foot displacement of every (step, foot joint) pair.

    Returns the (T - 1) x F contributions and the matching qualifying flags
    (height at the step's first frame below h_thresh)."""
    traj.check()
    if traj.frames < 2:
        raise InsufficientFramesError(f'foot skating needs at least 2 frames, got {traj.frames}')
    if not h_thresh > 0:
        raise ValidationError(f'foot skating height threshold must be positive, got {h_thresh}')
    if foot_joints is None:
        foot_joints = traj.foot_joints()
    foot_joints = list(foot_joints)
    if not foot_joints:
        raise ValidationError('no foot joints to evaluate')
    for j in foot_joints:
        if not 0 <= j < traj.joints:
            raise StructuralError(f'foot joint index {j} out of range for {traj.joints} joints')

    feet = traj.positions[:, foot_joints, :]
    step = feet[1:] - feet[:-1]
    ground = list(traj.ground_axes)
    v = np.abs(step[..., ground]).sum(axis=-1)
    h = feet[:-1, :, traj.height_axis] - floor_height
    qualifies = h < h_thresh
    contrib = np.where(qualifies, v * fs_weight(h, h_thresh), 0.0)
    return contrib, qualifies


# scalar metrics

def mpjpe(pred: JointTrajectory, gt: JointTrajectory) -> float:
    return float(joint_errors(pred, gt).mean())


def head_orientation_error(pred: HeadPoseSequence, gt: HeadPoseSequence) -> float:
    return float(orientation_errors(pred, gt).mean())


def head_translation_error(pred: HeadPoseSequence, gt: HeadPoseSequence) -> float:
    return float(translation_errors(pred, gt).mean())


def accel_error(pred: JointTrajectory, gt: JointTrajectory) -> float:
    return float(accel_errors(pred, gt).mean())


def foot_skating(traj: JointTrajectory, foot_joints: Optional[Sequence[int]] = None,
                 h_thresh: float = DEFAULT_FS_THRESH_MM, floor_height: float = DEFAULT_FLOOR_MM) -> float:
    """Mean weighted contribution over qualifying steps; 0 if none qualify."""
    contrib, qualifies = foot_skating_terms(traj, foot_joints, h_thresh, floor_height)
    if not qualifies.any():
        return 0.0
    return float(contrib[qualifies].mean())


# reports

_Terms = namedtuple('_Terms', ['joint', 'orient', 'trans', 'accel', 'fs', 'fs_ok'])


def _mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    return float(values.mean()) if values.size else 0.0


def _fs_steps(contrib, qualifies) -> np.ndarray:
    counts = qualifies.sum(axis=1)
    sums = np.where(qualifies, contrib, 0.0).sum(axis=1)
    return np.divide(sums, counts, out=np.zeros(len(sums)), where=counts > 0)


class MetricReport(namedtuple('MetricReport', ['mpjpe_mm', 'o_head', 't_head_mm', 'accel_mm_s2', 'fs_mm',
                                               'per_frame', 'per_sequence'],
                              defaults=(None, None))):
    """The five evaluation metrics plus per-frame and per-sequence breakdowns."""

    def summary(self) -> 'OrderedDict[str, float]':
        return OrderedDict((header, float(getattr(self, field))) for header, field, _ in TABLE_COLUMNS)

    def to_text(self) -> str:
        lines = [f'{header}={value:.6f}' for header, value in self.summary().items()]
        for name, row in (self.per_sequence or {}).items():
            cells = ' '.join(f'{header}={row[header]:.6f}' for header, _, _ in TABLE_COLUMNS)
            lines.append(f'[{name}] {cells}')
        return '\n'.join(lines) + '\n'

    def to_dict(self) -> dict:
        out = {
            'metrics': dict(self.summary()),
            'units': {header: unit for header, _, unit in TABLE_COLUMNS},
        }
        if self.per_frame is not None:
            out['per_frame'] = {k: [float(x) for x in v] for k, v in self.per_frame.items()}
        if self.per_sequence is not None:
            out['per_sequence'] = {k: dict(v) for k, v in self.per_sequence.items()}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> 'MetricReport':
        metrics = d['metrics']
        return cls(**{field: float(metrics[header]) for header, field, _ in TABLE_COLUMNS},
                   per_frame=d.get('per_frame'), per_sequence=d.get('per_sequence'))


HeadReport = namedtuple('HeadReport', ['o_head', 't_head_mm', 'per_frame'])


def _terms(pred: PoseRecord, gt: PoseRecord, config: MetricConfig) -> _Terms:
    if pred.body is None or gt.body is None or pred.head is None or gt.head is None:
        raise StructuralError('evaluation needs body trajectories and head poses on both sides')
    if pred.body.frames != pred.head.frames or gt.body.frames != gt.head.frames:
        raise StructuralError('body trajectory and head poses differ in length')
    fs, fs_ok = foot_skating_terms(pred.body, config.foot_joints, config.fs_thresh_mm, config.floor_mm)
    return _Terms(
        joint=joint_errors(pred.body, gt.body),
        orient=orientation_errors(pred.head, gt.head),
        trans=translation_errors(pred.head, gt.head),
        accel=accel_errors(pred.body, gt.body),
        fs=fs,
        fs_ok=fs_ok,
    )


def _report(terms: Sequence[_Terms], names: Optional[Sequence[str]] = None) -> MetricReport:
    def pooled(field):
        return np.concatenate([getattr(t, field).reshape(-1) for t in terms])

    fs, fs_ok = pooled('fs'), pooled('fs_ok')
    per_frame = {
        'mpjpe_mm': np.concatenate([t.joint.mean(axis=1) for t in terms]),
        'o_head': pooled('orient'),
        't_head_mm': pooled('trans'),
        'accel_mm_s2': np.concatenate([t.accel.mean(axis=1) for t in terms]),
        'fs_mm': np.concatenate([_fs_steps(t.fs, t.fs_ok) for t in terms]),
    }
    report = MetricReport(
        mpjpe_mm=_mean(pooled('joint')),
        o_head=_mean(pooled('orient')),
        t_head_mm=_mean(pooled('trans')),
        accel_mm_s2=_mean(pooled('accel')),
        fs_mm=_mean(fs[fs_ok]),
        per_frame=per_frame,
    )
    if names is None:
        return report
    per_sequence = OrderedDict()
    for name, t in zip(names, terms):
        per_sequence[name] = _report([t]).summary()
    return report._replace(per_sequence=per_sequence)


def evaluate_all(pred: PoseRecord, gt: PoseRecord, config: MetricConfig = MetricConfig()) -> MetricReport:
    """All five metrics for one sequence.

    Foot skating is measured on the prediction alone, so pred = gt scores the
    ground truth's own skating; it is 0 only when the ground truth does not
    slide its feet on the floor."""
    return _report([_terms(pred, gt, config)])


def evaluate_sequences(pairs: Mapping[str, Tuple[PoseRecord, PoseRecord]],
                       config: MetricConfig = MetricConfig()) -> MetricReport:
    """Pooled metrics over several sequences (per-frame mean over the
    concatenated set) with a per-sequence breakdown."""
    if not pairs:
        raise StructuralError('no sequences to evaluate')
    names = list(pairs)
    terms = [_terms(pred, gt, config) for pred, gt in (pairs[n] for n in names)]
    logger.info('evaluated %d sequences, %d frames', len(names), sum(len(t.orient) for t in terms))
    return _report(terms, names)


def evaluate_head(pred: HeadPoseSequence, gt: HeadPoseSequence) -> HeadReport:
    """Head-only comparison (orientation and translation error)."""
    orient = orientation_errors(pred, gt)
    trans = translation_errors(pred, gt)
    return HeadReport(o_head=float(orient.mean()), t_head_mm=float(trans.mean()),
                      per_frame={'o_head': orient, 't_head_mm': trans})
