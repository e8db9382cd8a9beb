import math

import numpy as np
import pytest

from egovox.errors import InsufficientFramesError, StructuralError
from egovox.pose.metrics import (
    MetricConfig,
    MetricReport,
    accel_error,
    evaluate_all,
    evaluate_head,
    evaluate_sequences,
    foot_skating,
    fs_weight,
    head_orientation_error,
    head_translation_error,
    mpjpe,
)
from egovox.pose.trajectory import HeadPoseSequence, JointTrajectory, PoseRecord

from oracles import naive_foot_skating


def rot_z(degrees):
    a = math.radians(degrees)
    return np.array([[math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0], [0.0, 0.0, 1.0]])


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_record(rng, frames=12, joints=24):
    body = JointTrajectory(rng.normal(scale=300.0, size=(frames, joints, 3)) + [0, 0, 100], 30)
    head = HeadPoseSequence(np.stack([random_rotation(rng) for _ in range(frames)]),
                            rng.normal(scale=500.0, size=(frames, 3)))
    return PoseRecord(body=body, head=head)


def test_rotation_error_analytics():
    identity = HeadPoseSequence.identity(1)
    assert head_orientation_error(identity, identity) == 0.0
    quarter = HeadPoseSequence(rot_z(90)[None], np.zeros((1, 3)))
    half = HeadPoseSequence(rot_z(180)[None], np.zeros((1, 3)))
    assert abs(head_orientation_error(quarter, identity) - 2.0) <= 1e-9
    assert abs(head_orientation_error(half, identity) - math.sqrt(8)) <= 1e-9


def test_mpjpe_three_four_five():
    gt = JointTrajectory(np.zeros((1, 1, 3)), 30)
    pred = JointTrajectory(np.array([[[3.0, 4.0, 0.0]]]), 30)
    assert mpjpe(pred, gt) == 5.0


def test_translation_error():
    a = HeadPoseSequence.identity(2)
    b = a._replace(translations=np.array([[0.0, 0.0, 10.0], [6.0, 8.0, 0.0]]))
    assert head_translation_error(b, a) == 10.0


def test_identical_inputs_score_zero(rng):
    rec = random_record(rng)
    positions = rec.body.positions.copy()
    positions[:, [7, 8, 10, 11], 2] = 500.0
    rec = rec._replace(body=rec.body._replace(positions=positions))
    report = evaluate_all(rec, rec)
    assert report.mpjpe_mm == 0
    assert report.o_head == pytest.approx(0, abs=1e-12)
    assert report.t_head_mm == 0
    assert report.accel_mm_s2 == 0
    assert report.fs_mm == 0


def test_identical_inputs_keep_ground_truth_skating():
    positions = np.zeros((5, 24, 3))
    positions[:, 7, 0] = 3.0 * np.arange(5)
    rec = PoseRecord(body=JointTrajectory(positions, 30), head=HeadPoseSequence.identity(5))
    report = evaluate_all(rec, rec)
    assert (report.mpjpe_mm, report.t_head_mm, report.accel_mm_s2) == (0, 0, 0)
    assert report.o_head == pytest.approx(0, abs=1e-12)
    # joint 7 slides 3 mm per step at floor contact, the other three feet rest
    assert report.fs_mm == pytest.approx(0.75, abs=1e-12)
    assert report.fs_mm == pytest.approx(foot_skating(rec.body), abs=1e-12)


def test_still_feet_do_not_skate():
    positions = np.zeros((5, 24, 3))
    assert foot_skating(JointTrajectory(positions, 30)) == 0


def test_common_rotation_invariance(rng):
    pred, gt = random_record(rng), random_record(rng)
    R = random_rotation(rng)

    def rotate(rec):
        body = rec.body._replace(positions=rec.body.positions @ R.T)
        head = HeadPoseSequence(np.einsum('ij,tjk->tik', R, rec.head.rotations), rec.head.translations @ R.T)
        return PoseRecord(body, head)

    assert mpjpe(rotate(pred).body, rotate(gt).body) == pytest.approx(mpjpe(pred.body, gt.body), abs=1e-9)
    assert (head_translation_error(rotate(pred).head, rotate(gt).head)
            == pytest.approx(head_translation_error(pred.head, gt.head), abs=1e-9))


def test_orientation_error_left_invariance(rng):
    for _ in range(50):
        pred, gt = random_record(rng).head, random_record(rng).head
        Q = random_rotation(rng)
        turned_pred = pred._replace(rotations=np.einsum('ij,tjk->tik', Q, pred.rotations))
        turned_gt = gt._replace(rotations=np.einsum('ij,tjk->tik', Q, gt.rotations))
        assert (head_orientation_error(turned_pred, turned_gt)
                == pytest.approx(head_orientation_error(pred, gt), abs=1e-9))


def test_accel_affine_in_time_invariance(rng):
    pred, gt = random_record(rng, frames=20), random_record(rng, frames=20)
    t = np.arange(20, dtype=float)[:, None, None]
    a, b = rng.normal(size=(1, 24, 3)), rng.normal(size=(1, 24, 3))
    shifted = pred.body._replace(positions=pred.body.positions + a + b * t)
    assert accel_error(shifted, gt.body) == pytest.approx(accel_error(pred.body, gt.body), abs=1e-6)


def test_accel_needs_three_frames():
    traj = JointTrajectory(np.zeros((2, 1, 3)), 30)
    with pytest.raises(InsufficientFramesError):
        accel_error(traj, traj)


def test_accel_constant_acceleration():
    t = np.arange(4, dtype=float) / 30
    gt = JointTrajectory(np.zeros((4, 1, 3)), 30)
    positions = np.zeros((4, 1, 3))
    positions[:, 0, 0] = 0.5 * 9810.0 * t ** 2
    assert accel_error(JointTrajectory(positions, 30), gt) == pytest.approx(9810.0, rel=1e-9)


def test_fs_weight_monotone():
    h = np.linspace(0, 50, 501)
    w = fs_weight(h, 50.0)
    assert w[0] == 1.0 and w[-1] == 0.0
    assert (np.diff(w) < 0).all()
    assert fs_weight(-10.0, 50.0) == 1.0


def test_foot_skating_floor_contact():
    positions = np.zeros((2, 1, 3))
    positions[1, 0] = [3.0, 4.0, 0.0]
    assert foot_skating(JointTrajectory(positions, 30), [0], 50.0, 0.0) == 7.0


def test_foot_skating_ignores_lifted_feet():
    positions = np.zeros((2, 1, 3))
    positions[:, 0, 2] = 60.0
    positions[1, 0, 0] = 100.0
    assert foot_skating(JointTrajectory(positions, 30), [0]) == 0.0


def test_foot_skating_matches_loop(rng):
    for up in ('y', 'z'):
        positions = rng.uniform(-20, 80, size=(15, 24, 3))
        traj = JointTrajectory(positions, 30, up_axis=up)
        expected = naive_foot_skating(positions, [7, 8, 10, 11], 50.0, 5.0, up)
        assert foot_skating(traj, None, 50.0, 5.0) == pytest.approx(expected, abs=1e-9)


def test_foot_joints_by_name():
    names = ('root', 'l_toe', 'r_toe', 'head')
    traj = JointTrajectory(np.zeros((2, 4, 3)), 30, joint_names=names)
    assert traj.foot_joints() == [1, 2]
    assert JointTrajectory(np.zeros((2, 24, 3)), 30).foot_joints() == [7, 8, 10, 11]


def test_foot_skating_errors():
    with pytest.raises(InsufficientFramesError):
        foot_skating(JointTrajectory(np.zeros((1, 1, 3)), 30), [0])
    with pytest.raises(StructuralError):
        foot_skating(JointTrajectory(np.zeros((2, 1, 3)), 30), [3])


def test_shape_mismatch():
    a = JointTrajectory(np.zeros((3, 2, 3)), 30)
    b = JointTrajectory(np.zeros((3, 3, 3)), 30)
    with pytest.raises(StructuralError):
        mpjpe(a, b)
    with pytest.raises(StructuralError):
        head_translation_error(HeadPoseSequence.identity(2), HeadPoseSequence.identity(3))


def test_evaluate_sequences_pools_frames(rng):
    pairs = {'a': (random_record(rng, 10), random_record(rng, 10)),
             'b': (random_record(rng, 30), random_record(rng, 30))}
    report = evaluate_sequences(pairs)
    single = {name: evaluate_all(*pair) for name, pair in pairs.items()}
    expected = (10 * single['a'].t_head_mm + 30 * single['b'].t_head_mm) / 40
    assert report.t_head_mm == pytest.approx(expected, rel=1e-12)
    assert list(report.per_sequence) == ['a', 'b']
    assert report.per_sequence['b']['MPJPE'] == pytest.approx(single['b'].mpjpe_mm, rel=1e-12)
    assert len(report.per_frame['o_head']) == 40
    with pytest.raises(StructuralError):
        evaluate_sequences({})


def test_report_text_and_dict(rng):
    rec_a, rec_b = random_record(rng), random_record(rng)
    report = evaluate_all(rec_a, rec_b, MetricConfig(fs_thresh_mm=40.0))
    lines = report.to_text().splitlines()
    assert [line.split('=')[0] for line in lines] == ['O_head', 'T_head', 'MPJPE', 'Accel', 'FS']
    d = report.to_dict()
    assert d['units']['T_head'] == 'mm'
    again = MetricReport.from_dict(d)
    assert again.summary() == report.summary()


def test_evaluate_needs_head_and_body(rng):
    rec = random_record(rng)
    with pytest.raises(StructuralError):
        evaluate_all(rec._replace(head=None), rec)


def test_evaluate_head(rng):
    a, b = random_record(rng).head, random_record(rng).head
    report = evaluate_head(a, b)
    assert report.o_head == pytest.approx(head_orientation_error(a, b))
    assert len(report.per_frame['t_head_mm']) == a.frames
