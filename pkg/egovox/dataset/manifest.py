"""Per-sequence manifests and dataset statistics."""

import logging
import os
from collections import Counter, namedtuple
from enum import Enum
from typing import Iterable, List, Optional, Sequence

from ..errors import SchemaError, ValidationError
from ..utils import atomic_write_text
from .formats import _Fields, _dump_json, _parse_json, _read_bytes, _reader
from .utils import list_files


logger = logging.getLogger(__name__)

STANDARD_SEQUENCE_LENGTH = 150
MANIFEST_SUFFIX = '.json'
PATH_KINDS = ('events', 'masks', 'poses', 'meshes')
OPTIONAL_PATH_KINDS = ('voxels',)


class Split(Enum):
    train = "train"
    test = "test"


class SequenceManifest(namedtuple('SequenceManifest',
                                  ['sequence_id', 'split', 'frame_count', 'fps', 'paths'])):
    """One sequence: id, split, length and paths relative to the dataset root."""

    def check(self):
        if not isinstance(self.sequence_id, str) or not self.sequence_id:
            raise ValidationError(f'sequence id must be a non-empty string, got {self.sequence_id!r}')
        if not isinstance(self.split, Split):
            raise ValidationError(f'split must be a Split, got {self.split!r}')
        if not self.frame_count > 0:
            raise ValidationError(f'{self.sequence_id}: frame_count must be positive, got {self.frame_count}')
        if not self.fps > 0:
            raise ValidationError(f'{self.sequence_id}: fps must be positive, got {self.fps}')
        for kind in PATH_KINDS:
            if kind not in self.paths:
                raise ValidationError(f'{self.sequence_id}: missing {kind} path')
        for kind, rel in self.paths.items():
            if os.path.isabs(rel):
                raise ValidationError(f'{self.sequence_id}: {kind} path {rel!r} is not relative')
        return self

    def path(self, kind: str, root='.') -> Optional[str]:
        rel = self.paths.get(kind)
        return None if rel is None else os.path.join(root, rel)

    def to_dict(self) -> dict:
        return {
            'sequence_id': self.sequence_id,
            'split': self.split.value,
            'frame_count': self.frame_count,
            'fps': self.fps,
            'paths': dict(self.paths),
        }


class DatasetStats(namedtuple('DatasetStats', ['n_sequences', 'n_frames', 'n_train', 'n_test', 'warnings'],
                              defaults=((),))):

    def to_dict(self) -> dict:
        return {
            'n_sequences': self.n_sequences,
            'n_frames': self.n_frames,
            'n_train': self.n_train,
            'n_test': self.n_test,
            'warnings': list(self.warnings),
        }

    def to_text(self) -> str:
        lines = [f'{k}={v}' for k, v in self.to_dict().items() if k != 'warnings']
        lines += [f'warning: {w}' for w in self.warnings]
        return '\n'.join(lines) + '\n'


def dataset_stats(manifests: Sequence[SequenceManifest]) -> DatasetStats:
    ids = Counter(m.sequence_id for m in manifests)
    dup = sorted(k for k, c in ids.items() if c > 1)
    if dup:
        raise ValidationError(f'duplicate sequence id {dup[0]!r} ({len(dup)} duplicated in total)')

    warnings = []
    odd = [m.sequence_id for m in manifests if m.frame_count != STANDARD_SEQUENCE_LENGTH]
    if odd:
        warnings.append(f'{len(odd)} sequences are not {STANDARD_SEQUENCE_LENGTH} frames long '
                        f'(first: {odd[0]})')
    fps = sorted({m.fps for m in manifests})
    if len(fps) > 1:
        warnings.append(f'mixed frame rates: {fps}')
    for w in warnings:
        logger.warning(w)

    n_train = sum(1 for m in manifests if m.split is Split.train)
    n_test = sum(1 for m in manifests if m.split is Split.test)
    return DatasetStats(
        n_sequences=len(manifests),
        n_frames=sum(m.frame_count for m in manifests),
        n_train=n_train,
        n_test=n_test,
        warnings=tuple(warnings),
    )


def decode_manifest(data: bytes) -> SequenceManifest:
    obj, text = _parse_json(data)
    fields = _Fields(obj, text)
    sequence_id = fields.string('sequence_id')
    split = fields.string('split', [s.value for s in Split])
    paths = fields.require('paths')
    if not isinstance(paths, dict):
        raise fields.error('paths', 'expected an object')
    p = _Fields(paths, text, 'paths.')
    resolved = {kind: p.string(kind) for kind in PATH_KINDS}
    for kind in OPTIONAL_PATH_KINDS:
        value = p.string(kind, optional=True)
        if value is not None:
            resolved[kind] = value
    manifest = SequenceManifest(sequence_id=sequence_id, split=Split(split),
                                frame_count=fields.integer('frame_count', 1),
                                fps=fields.number('fps', positive=True), paths=resolved)
    try:
        return manifest.check()
    except ValidationError as e:
        raise SchemaError(0, str(e)) from None


@_reader
def read_manifest(path) -> SequenceManifest:
    return decode_manifest(_read_bytes(path))


def write_manifest(path, manifest: SequenceManifest):
    manifest.check()
    atomic_write_text(path, _dump_json(manifest.to_dict(), indent=2))


def load_manifests(directory) -> List[SequenceManifest]:
    """Every ``*.json`` manifest in ``directory`` in natural file-name order."""
    files = list_files(directory, MANIFEST_SUFFIX)
    manifests = [read_manifest(f) for f in files]
    logger.info('loaded %d manifests from %s', len(manifests), directory)
    return manifests


def write_manifests(directory, manifests: Iterable[SequenceManifest]):
    os.makedirs(directory, exist_ok=True)
    for m in manifests:
        write_manifest(os.path.join(directory, m.sequence_id + MANIFEST_SUFFIX), m)
