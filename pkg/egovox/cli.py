"""egovox command line: synth, voxelize, maskgen, segment, evaluate, stats, selftest."""

import argparse
import json
import logging
import os
import sys

from tqdm import tqdm

from .config import CHOICES, _DEFAULTS, help_text, load_config
from .dataset.formats import (
    read_events,
    read_frame,
    read_intrinsics,
    read_mask,
    read_mesh,
    read_poses,
    read_timestamps,
    read_voxel_grid,
    write_events,
    write_mask,
    write_report,
    write_voxel_grid,
)
from .dataset.manifest import dataset_stats, load_manifests
from .dataset.utils import FRAME_SUFFIXES, MASK_SUFFIX, MESH_SUFFIX, SOFT_MASK_SUFFIX, frame_name, list_files
from .errors import ConfigError, EgovoxError, StructuralError
from .events.simulator import FrameSequence, SynthConfig, generate_events
from .events.voxel import frame_window
from .masks.camera import RigidTransform
from .masks.raster import BinaryMask, make_dynamic_masks
from .masks.segmentation import SoftMask, segmentation_report
from .pipeline import build_pipeline
from .pose.metrics import MetricConfig, evaluate_sequences
from .selftest import BENCH_EVENTS, run_benchmark, run_selftest
from .utils import Timer, time_text


logger = logging.getLogger(__name__)

TIMESTAMPS_FILE = 'timestamps.txt'
POSE_SUFFIX = '.json'


def _add_config_flags(parser, keys):
    for key in keys:
        default = _DEFAULTS[key]
        kind = float if key == 'fps' else type(default)
        parser.add_argument('--' + key.replace('_', '-'), dest=key, type=kind, default=None,
                            choices=CHOICES.get(key), help=help_text(key))


def _progress(iterable, args, desc, total=None):
    return tqdm(iterable, total=total, leave=False, desc=desc, disable=args.quiet)


# subcommands

def cmd_synth(args, cfg):
    if not os.path.isdir(args.frames):
        raise FileNotFoundError(2, 'no such frames directory', args.frames)
    files = list_files(args.frames, FRAME_SUFFIXES)
    ts_path = args.timestamps or os.path.join(args.frames, TIMESTAMPS_FILE)
    if not os.path.exists(ts_path):
        raise ConfigError(f'missing timestamps: {ts_path} does not exist')
    timestamps = read_timestamps(ts_path)
    if len(timestamps) != len(files):
        raise ConfigError(f'missing timestamps: {len(timestamps)} timestamps for {len(files)} frames')
    if not files:
        raise ConfigError(f'no frames in {args.frames}')
    frames = [read_frame(f) for f in _progress(files, args, 'frames')]
    seq = FrameSequence.from_frames(frames, timestamps)
    synth = SynthConfig(c_pos=cfg.c_pos, c_neg=cfg.c_neg, eps_log=cfg.eps_log,
                        refractory_ns=cfg.refractory_ns, threshold_sigma=cfg.threshold_sigma, seed=cfg.seed)
    stream = generate_events(seq, synth)
    t_begin, t_end = frame_window(timestamps[0], len(timestamps), cfg.fps)
    if stream.t_end > t_end:
        logger.warning('frames span more than %d voxel frames at %s fps; voxel and mask counts will differ',
                       len(timestamps), cfg.fps)
        t_end = stream.t_end
    stream = stream.with_window(t_begin, t_end)
    write_events(args.out, stream, window=True)
    logger.info('%d frames -> %d events in [%d, %d), %s', len(seq), len(stream), t_begin, t_end, args.out)
    print(len(stream))


def cmd_voxelize(args, cfg):
    stream = read_events(args.events, t_begin=args.t_begin, t_end=args.t_end)
    pipeline = build_pipeline(cfg, source='stream', normalize=not args.raw)
    timer = Timer()
    grid = pipeline(stream=stream).grid
    logger.info('voxelized %d events in %s', len(stream), time_text(timer.t()))
    write_voxel_grid(args.out, grid)
    print(f'frames={grid.frames} bins={grid.bins} height={grid.height} width={grid.width}')


def _mesh_sequence(path):
    if os.path.isdir(path):
        return [read_mesh(f) for f in list_files(path, MESH_SUFFIX)]
    return [read_mesh(path)]


def cmd_maskgen(args, cfg):
    K = read_intrinsics(args.intrinsics)
    meshes = _mesh_sequence(args.meshes)
    if args.camera_poses is not None:
        head = read_poses(args.camera_poses).head
        if head is None:
            raise StructuralError(f'{args.camera_poses}: no head section to take camera poses from')
        transforms = [RigidTransform.from_head_pose(R, t) for R, t in zip(head.rotations, head.translations)]
        if len(meshes) == 1:
            meshes = meshes * len(transforms)
    else:
        transforms = [None] * len(meshes)
    if len(meshes) != len(transforms):
        raise StructuralError(f'{len(meshes)} meshes for {len(transforms)} camera poses')

    if cfg.jobs > 1:
        masks = make_dynamic_masks(meshes, transforms, K, cfg.dilate, cfg.z_near, cfg.jobs)
    else:
        masks = [make_dynamic_masks([mesh], [T], K, cfg.dilate, cfg.z_near)[0]
                 for mesh, T in _progress(zip(meshes, transforms), args, 'maskgen', len(meshes))]
    os.makedirs(args.out, exist_ok=True)
    for k, mask in enumerate(masks):
        write_mask(os.path.join(args.out, frame_name(k, MASK_SUFFIX)), mask)
    logger.info('%d masks, %d pixels set in total', len(masks), sum(m.count() for m in masks))
    print(len(masks))


def _read_masks(directory, suffix, args, desc):
    return [read_mask(f) for f in _progress(list_files(directory, suffix), args, desc)]


def cmd_segment(args, cfg):
    grid = read_voxel_grid(args.voxels)
    masks = _read_masks(args.masks, MASK_SUFFIX, args, 'masks')
    if len(masks) == 1 and grid.frames != 1:
        masks = masks[0]
    elif len(masks) != grid.frames:
        raise StructuralError(f'{len(masks)} masks for {grid.frames} voxel frames')
    pipeline = build_pipeline(cfg, source='grid', normalize=not args.raw)
    out = pipeline(grid=grid, masks=masks)
    write_voxel_grid(args.out, out.grid)
    logger.info('masked %d frames -> %s', out.grid.frames, args.out)

    if args.pred_masks is not None:
        preds = []
        for m in _read_masks(args.pred_masks, (SOFT_MASK_SUFFIX, MASK_SUFFIX), args, 'predictions'):
            preds.append(m if isinstance(m, SoftMask) else SoftMask(m.bits.astype(float)))
        gts = out.masks
        if isinstance(gts, BinaryMask) or gts is None:
            raise StructuralError('a segmentation report needs one ground-truth mask per frame')
        report = segmentation_report(preds, gts, tau=cfg.tau, clamp_eps=cfg.clamp_eps)
        print(f'mean_bce={report.mean_bce:.6f}')
        print(f'mean_iou={report.mean_iou:.6f}')
        if args.report is not None:
            write_report(args.report, report)


def _pose_pairs(pred, gt):
    if os.path.isdir(pred) != os.path.isdir(gt):
        raise StructuralError('--pred and --gt must both be files or both be directories')
    if not os.path.isdir(pred):
        name = os.path.splitext(os.path.basename(gt))[0]
        return {name: (pred, gt)}
    pred_files = {os.path.basename(f): f for f in list_files(pred, POSE_SUFFIX)}
    gt_files = {os.path.basename(f): f for f in list_files(gt, POSE_SUFFIX)}
    missing = sorted(set(pred_files) ^ set(gt_files))
    if missing:
        raise StructuralError(f'prediction and ground truth do not match: {missing[0]} has no counterpart')
    if not gt_files:
        raise StructuralError(f'no pose files in {gt}')
    return {os.path.splitext(n)[0]: (pred_files[n], gt_files[n]) for n in gt_files}


def _with_up_axis(record, up):
    if up is None or record.body is None:
        return record
    return record._replace(body=record.body._replace(up_axis=up))


def cmd_evaluate(args, cfg):
    up = cfg.up if cfg.is_explicit('up') else None
    pairs = {}
    for name, (pred, gt) in _pose_pairs(args.pred, args.gt).items():
        pairs[name] = (_with_up_axis(read_poses(pred), up), _with_up_axis(read_poses(gt), up))
    report = evaluate_sequences(pairs, MetricConfig(fs_thresh_mm=cfg.fs_thresh_mm, floor_mm=cfg.floor_mm))
    sys.stdout.write(report.to_text())
    if args.out is not None:
        write_report(args.out, report)


def cmd_stats(args, cfg):
    stats = dataset_stats(load_manifests(args.directory))
    if args.json:
        print(json.dumps(stats.to_dict(), indent=2, sort_keys=True))
    else:
        sys.stdout.write(stats.to_text())


def cmd_selftest(args, cfg):
    results = run_selftest()
    for name, error in results:
        print(f'PASS {name}' if error is None else f'FAIL {name}: {error}')
    failed = sum(error is not None for _, error in results)
    if args.bench:
        rate = run_benchmark(n_events=args.bench_events, fps=cfg.fps, bins=cfg.bins)
        print(f'voxelize throughput: {rate:.3e} events/s')
    if failed:
        raise EgovoxError(f'{failed} of {len(results)} self-tests failed')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='egovox', description=__doc__)
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings only, no progress bars')
    parser.add_argument('--config', default=None, help='key = value configuration file')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', help='frames directory -> EVT1 events')
    p.add_argument('frames', help='directory of PGM/PPM frames')
    p.add_argument('out', help='output EVT1 file')
    p.add_argument('--timestamps', default=None, help=f'timestamp list (default: FRAMES/{TIMESTAMPS_FILE})')
    _add_config_flags(p, ['fps', 'c_pos', 'c_neg', 'eps_log', 'refractory_ns', 'threshold_sigma', 'seed'])
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser('voxelize', help='EVT1 events -> voxel grid')
    p.add_argument('events', help='input EVT1 file')
    p.add_argument('out', help='output voxel file (header written to OUT.json)')
    p.add_argument('--raw', action='store_true', help='skip normalization')
    p.add_argument('--t-begin', dest='t_begin', type=int, default=None, help='stream window start (ns)')
    p.add_argument('--t-end', dest='t_end', type=int, default=None, help='stream window end (ns)')
    _add_config_flags(p, ['fps', 'bins', 'norm', 'jobs'])
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser('maskgen', help='meshes + camera poses + intrinsics -> PBM masks')
    p.add_argument('out', help='output directory for per-frame masks')
    p.add_argument('--meshes', required=True, help='OBJ file or directory of per-frame OBJ files')
    p.add_argument('--intrinsics', required=True, help='camera intrinsics JSON')
    p.add_argument('--camera-poses', dest='camera_poses', default=None,
                   help='pose file whose head section gives camera-to-world poses (mm)')
    _add_config_flags(p, ['dilate', 'z_near', 'jobs'])
    p.set_defaults(func=cmd_maskgen)

    p = sub.add_parser('segment', help='voxel grid + masks -> masked voxel grid')
    p.add_argument('voxels', help='input voxel file')
    p.add_argument('masks', help='directory of PBM masks, one per frame')
    p.add_argument('out', help='output voxel file')
    p.add_argument('--raw', action='store_true', help='do not normalize a raw input grid')
    p.add_argument('--pred-masks', dest='pred_masks', default=None, help='directory of predicted soft masks')
    p.add_argument('--report', default=None, help='write the BCE/IoU report as JSON')
    _add_config_flags(p, ['norm', 'order', 'tau', 'clamp_eps'])
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser('evaluate', help='predicted vs ground-truth poses -> metric report')
    p.add_argument('--pred', required=True, help='pose file or directory')
    p.add_argument('--gt', required=True, help='pose file or directory')
    p.add_argument('--out', default=None, help='write the report as JSON')
    _add_config_flags(p, ['fs_thresh_mm', 'floor_mm', 'up'])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('stats', help='manifest directory -> dataset statistics')
    p.add_argument('directory', help='directory of sequence manifests')
    p.add_argument('--json', action='store_true', help='print JSON')
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser('selftest', help='run the analytic fixtures')
    p.add_argument('--bench', action='store_true', help='also measure voxelize throughput')
    p.add_argument('--bench-events', dest='bench_events', type=int, default=BENCH_EVENTS,
                   help='events in the benchmark stream')
    _add_config_flags(p, ['fps', 'bins'])
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(name)s -   %(message)s",
        datefmt="%m/%d/%Y %H:%M:%S",
        level=level,
        stream=sys.stderr,
    )

    try:
        flags = {key: getattr(args, key) for key in _DEFAULTS if hasattr(args, key)}
        cfg = load_config(args.config, flags)
        logger.info('effective config: %r', cfg)
        args.func(args, cfg)
    except (EgovoxError, OSError) as e:
        logger.error('%s', e)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
