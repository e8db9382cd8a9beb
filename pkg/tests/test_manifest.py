import importlib.util
import json
import os

import numpy as np
import pytest
import torch

from egovox.dataset.dataset import VoxelMaskDataset
from egovox.dataset.formats import write_mask, write_voxel_grid
from egovox.dataset.manifest import (
    SequenceManifest,
    Split,
    dataset_stats,
    load_manifests,
    read_manifest,
    write_manifests,
)
from egovox.errors import FormatError, SchemaError, StructuralError, ValidationError
from egovox.events.voxel import VoxelGrid
from egovox.masks.raster import BinaryMask

PATHS = {'events': 'e.evt', 'masks': 'masks', 'poses': 'p.json', 'meshes': 'meshes'}


def load_script(name):
    path = os.path.join(os.path.dirname(__file__), '..', 'scripts', name + '.py')
    loader_spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(loader_spec)
    loader_spec.loader.exec_module(module)
    return module


def manifests(n_train, n_test, frame_count=150, fps=30):
    return [SequenceManifest(f'seq{i:04d}', Split.train if i < n_train else Split.test, frame_count, fps, PATHS)
            for i in range(n_train + n_test)]


def test_dataset_counts():
    stats = dataset_stats(manifests(966, 301))
    assert (stats.n_sequences, stats.n_frames, stats.n_train, stats.n_test) == (1267, 190050, 966, 301)
    assert stats.warnings == ()


def test_empty_dataset():
    stats = dataset_stats([])
    assert (stats.n_sequences, stats.n_frames) == (0, 0)


def test_nonstandard_length_and_fps_warn():
    ms = manifests(2, 1)
    ms[1] = ms[1]._replace(frame_count=90)
    ms[2] = ms[2]._replace(fps=60)
    stats = dataset_stats(ms)
    assert stats.n_frames == 390
    assert len(stats.warnings) == 2
    assert 'warning:' in stats.to_text()


def test_duplicate_id():
    ms = manifests(2, 0)
    with pytest.raises(ValidationError):
        dataset_stats(ms + ms[:1])


def test_load_manifests_natural_order(tmp_path):
    ms = [SequenceManifest(f'seq{i}', Split.train, 150, 30, PATHS) for i in (10, 2, 1)]
    write_manifests(tmp_path, ms)
    assert [m.sequence_id for m in load_manifests(tmp_path)] == ['seq1', 'seq2', 'seq10']


@pytest.mark.parametrize('change', [
    lambda d: d.pop('frame_count'),
    lambda d: d.__setitem__('split', 'val'),
    lambda d: d['paths'].pop('poses'),
    lambda d: d['paths'].__setitem__('events', '/abs/e.evt'),
    lambda d: d.__setitem__('fps', 0),
])
def test_manifest_schema(tmp_path, change):
    doc = manifests(1, 0)[0].to_dict()
    change(doc)
    path = tmp_path / 'm.json'
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        read_manifest(path)


def test_manifest_not_json(tmp_path):
    path = tmp_path / 'm.json'
    path.write_bytes(b'{"sequence_id": "a",')
    with pytest.raises(FormatError) as e:
        read_manifest(path)
    assert e.value.offset == 20


def test_split_script():
    script = load_script('make_manifests')
    ids = [f'seq{i:04d}' for i in range(1267)]
    ms = script.manifests_for(ids)
    stats = dataset_stats(ms)
    assert (stats.n_train, stats.n_test, stats.n_frames) == (966, 301, 190050)
    assert ms == script.manifests_for(list(reversed(ids)))


def test_voxel_mask_dataset(tmp_path, rng):
    values = rng.random((2, 3, 4, 5)).astype(np.float32)
    m = SequenceManifest('s0', Split.train, 2, 30, dict(PATHS, masks='masks/s0', voxels='voxels/s0.vox'))
    write_voxel_grid(tmp_path / 'voxels' / 's0.vox', VoxelGrid(values, 30, True, 'frame'))
    os.makedirs(tmp_path / 'masks' / 's0')
    for k in range(2):
        write_mask(tmp_path / 'masks' / 's0' / f'{k:06d}.pbm', BinaryMask(rng.random((4, 5)) < 0.5))
    other = SequenceManifest('s1', Split.test, 2, 30, PATHS)

    data = VoxelMaskDataset([m, other], root=str(tmp_path), split='train')
    assert len(data) == 2
    item = data[1]
    assert item['voxel'].shape == (3, 4, 5) and item['voxel'].dtype == torch.float32
    assert item['mask'].shape == (4, 5)
    assert np.array_equal(item['voxel'].numpy(), values[1])
    assert len(VoxelMaskDataset([m, other], root=str(tmp_path), split=Split.test)) == 0

    os.remove(tmp_path / 'masks' / 's0' / '000001.pbm')
    with pytest.raises(StructuralError):
        VoxelMaskDataset([m], root=str(tmp_path))
