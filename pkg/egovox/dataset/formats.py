"""Readers and writers for every file egovox touches.

Binary layouts are described in docs/formats.md. Readers raise FormatError
(carrying the byte offset of the fault) for any malformed input; writers are
atomic and canonical (the same value always produces the same bytes)."""

import functools
import json
import logging
import os
import re
from collections import Counter
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigError, EgovoxError, FaceIndexError, FormatError, SchemaError, ValidationError
from ..events.stream import EventStream, validate_stream
from ..events.voxel import NORM_MODES, VoxelGrid
from ..masks.camera import CameraIntrinsics
from ..masks.raster import BinaryMask, TriangleMesh
from ..masks.segmentation import SoftMask
from ..pose.metrics import MetricReport
from ..pose.trajectory import UP_AXES, HeadPoseSequence, JointTrajectory, PoseRecord
from ..utils import atomic_write, atomic_write_text
from .utils import rgb_to_gray


logger = logging.getLogger(__name__)

EVT_MAGIC = b'EVT1'
EVT_HEADER = np.dtype([('magic', 'S4'), ('width', '<u2'), ('height', '<u2'), ('count', '<u8')])
EVT_RECORD = np.dtype([('x', '<u2'), ('y', '<u2'), ('t', '<u8'), ('p', 'i1'), ('pad', 'V3')])
# byte offset of each field inside a record
EVT_FIELD_OFFSETS = {name: EVT_RECORD.fields[name][1] for name in EVT_RECORD.names}
EVT_WINDOW_FORMAT = 'EVT1-window'

VOXEL_FORMAT = 'VOX1'
VOXEL_DTYPE = '<f4'
VOXEL_LAYOUT = 'TBHW'
SIDECAR_SUFFIX = '.json'

POSE_FORMAT = 'egovox-poses'
REPORT_FORMAT = 'egovox-report'
LENGTH_UNITS = 'mm'

SOFT_MAXVAL = 65535
PBM_VALUES_PER_LINE = 35
PGM_VALUES_PER_LINE = 11

_WHITESPACE = b' \t\n\r\v\f'
_TOKEN = re.compile(rb'\S+')
_INT64_LIMIT = 2 ** 63


def _reader(func):
    """Attach the path to reader failures and turn stray low-level errors into FormatError."""

    @functools.wraps(func)
    def wrapper(path, *args, **kwargs):
        try:
            return func(path, *args, **kwargs)
        except FormatError as e:
            raise e if e.path else e.with_path(path)
        except ConfigError:
            raise
        except (EgovoxError, ValueError, OverflowError, TypeError, IndexError, KeyError) as e:
            raise FormatError(0, f'malformed input: {e}', path=str(path)) from e
    return wrapper


def _read_bytes(path) -> bytes:
    with open(path, 'rb') as f:
        return f.read()


# EVT1 event streams

def encode_events(stream: EventStream) -> bytes:
    report = validate_stream(stream)
    if not report.ok:
        raise ValidationError(f'refusing to write an invalid stream: {report}')
    if not (0 <= stream.width <= 0xFFFF and 0 <= stream.height <= 0xFFFF):
        raise ValidationError(f'sensor size {stream.width}x{stream.height} does not fit 16 bits')
    header = np.zeros(1, dtype=EVT_HEADER)
    header['magic'] = EVT_MAGIC
    header['width'] = stream.width
    header['height'] = stream.height
    header['count'] = len(stream)
    records = np.zeros(len(stream), dtype=EVT_RECORD)
    records['x'] = stream.x
    records['y'] = stream.y
    records['t'] = stream.t
    records['p'] = stream.p
    return header.tobytes() + records.tobytes()


def write_events(path, stream: EventStream, window: bool = False):
    """Write an EVT1 file; with ``window`` the stream window also goes to
    ``path``.json, otherwise a window file left at that path is removed."""
    atomic_write(path, encode_events(stream))
    if window:
        write_event_window(path, stream.t_begin, stream.t_end)
    elif os.path.exists(sidecar_path(path)):
        os.remove(sidecar_path(path))
    logger.debug('wrote %d events to %s', len(stream), path)


def write_event_window(path, t_begin: int, t_end: int):
    if not 0 <= t_begin <= t_end < _INT64_LIMIT:
        raise ValidationError(f'window [{t_begin}, {t_end}) cannot be stored')
    doc = {'format': EVT_WINDOW_FORMAT, 't_begin': int(t_begin), 't_end': int(t_end)}
    atomic_write_text(sidecar_path(path), _dump_json(doc, indent=2))


def read_event_window(path) -> Optional[Tuple[int, int]]:
    """(t_begin, t_end) from the window file next to an EVT1 file, or None if there is none."""
    window_path = sidecar_path(path)
    if not os.path.exists(window_path):
        return None
    try:
        obj, text = _parse_json(_read_bytes(window_path))
        fields = _Fields(obj, text)
        if fields.string('format') != EVT_WINDOW_FORMAT:
            raise fields.error('format', f'expected {EVT_WINDOW_FORMAT!r}')
        t_begin, t_end = fields.integer('t_begin'), fields.integer('t_end')
        if t_begin > t_end:
            raise fields.error('t_end', f'window [{t_begin}, {t_end}) is inverted')
    except FormatError as e:
        raise e.with_path(window_path)
    return t_begin, t_end


def _first(flags) -> Optional[int]:
    hits = np.flatnonzero(flags)
    return int(hits[0]) if len(hits) else None


def decode_events(data: bytes, t_begin: Optional[int] = None, t_end: Optional[int] = None) -> EventStream:
    if len(data) < EVT_HEADER.itemsize:
        raise FormatError(len(data), f'truncated header: {len(data)} of {EVT_HEADER.itemsize} bytes')
    header = np.frombuffer(data, dtype=EVT_HEADER, count=1)[0]
    if bytes(header['magic']) != EVT_MAGIC:
        raise FormatError(0, f'bad magic {data[:4]!r}, expected {EVT_MAGIC!r}')
    width, height, count = int(header['width']), int(header['height']), int(header['count'])
    body = len(data) - EVT_HEADER.itemsize
    if body < count * EVT_RECORD.itemsize:
        n_full = body // EVT_RECORD.itemsize
        raise FormatError(len(data), f'truncated: header announces {count} events, record {n_full} is incomplete')
    end = EVT_HEADER.itemsize + count * EVT_RECORD.itemsize
    if len(data) > end:
        raise FormatError(end, f'{len(data) - end} trailing bytes after {count} events')

    rec = np.frombuffer(data, dtype=EVT_RECORD, count=count, offset=EVT_HEADER.itemsize)
    raw = np.frombuffer(data, dtype=np.uint8, count=count * EVT_RECORD.itemsize,
                        offset=EVT_HEADER.itemsize).reshape(count, EVT_RECORD.itemsize)
    pad = EVT_FIELD_OFFSETS['pad']

    def fault(index, field, message):
        offset = EVT_HEADER.itemsize + index * EVT_RECORD.itemsize + EVT_FIELD_OFFSETS[field]
        return FormatError(offset, f'event {index}: {message}')

    checks = (
        ('pad', raw[:, pad:].any(axis=1), 'non-zero padding'),
        ('x', rec['x'] >= width, f'x out of bounds for width {width}'),
        ('y', rec['y'] >= height, f'y out of bounds for height {height}'),
        ('t', rec['t'] >= np.uint64(_INT64_LIMIT), 'timestamp does not fit a signed 64-bit integer'),
        ('p', (rec['p'] != 1) & (rec['p'] != -1), 'polarity not in {-1,+1}'),
    )
    for field, bad, message in checks:
        k = _first(bad)
        if k is not None:
            raise fault(k, field, message)
    t = rec['t'].astype(np.int64)
    k = _first(np.diff(t) < 0)
    if k is not None:
        raise fault(k + 1, 't', 'unsorted')

    if t_begin is None:
        t_begin = 0
    if t_end is None:
        t_end = int(t[-1]) + 1 if count else t_begin
    if t_begin > t_end:
        raise FormatError(0, f'window [{t_begin}, {t_end}) is inverted')
    k = _first((t < t_begin) | (t >= t_end))
    if k is not None:
        raise fault(k, 't', f'timestamp outside [{t_begin}, {t_end})')
    return EventStream(width, height, rec['x'], rec['y'], t, rec['p'], t_begin, t_end)


@_reader
def read_events(path, t_begin: Optional[int] = None, t_end: Optional[int] = None) -> EventStream:
    """Read an EVT1 file.

    Each window bound comes from the argument, else from the ``path``.json
    window file, else defaults to [0, t_last + 1) ([0, 0) when empty)."""
    stored = read_event_window(path)
    if stored is not None:
        t_begin = stored[0] if t_begin is None else t_begin
        t_end = stored[1] if t_end is None else t_end
    return decode_events(_read_bytes(path), t_begin, t_end)


# JSON helpers

def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode('utf-8'))


def _key_offset(text: str, key: str) -> int:
    pos = text.find(f'"{key}"')
    return _byte_offset(text, pos) if pos >= 0 else 0


def _reject_constant(name):
    raise FormatError(0, f'non-finite number {name}')


def _parse_json(data: bytes):
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        raise FormatError(e.start, f'invalid UTF-8: {e.reason}') from None
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise FormatError(_byte_offset(text, e.pos), e.msg) from None
    except RecursionError:
        raise FormatError(0, 'nesting too deep') from None
    if not isinstance(obj, dict):
        raise SchemaError(0, 'top-level value must be an object')
    return obj, text


class _Fields:
    """Typed access to a JSON object with schema errors pointing at the key."""

    def __init__(self, obj: dict, text: str, where: str = ''):
        self.obj = obj
        self.text = text
        self.where = where

    def error(self, key, message) -> SchemaError:
        return SchemaError(_key_offset(self.text, key), f'{self.where}{key}: {message}')

    def get(self, key, default=None):
        return self.obj.get(key, default)

    def require(self, key):
        if key not in self.obj:
            raise SchemaError(0, f'{self.where}missing field {key!r}')
        return self.obj[key]

    def integer(self, key, minimum=0) -> int:
        value = self.require(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(key, f'expected an integer, got {value!r}')
        if value < minimum:
            raise self.error(key, f'must be >= {minimum}, got {value}')
        return value

    def number(self, key, positive=False) -> float:
        value = self.require(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(key, f'expected a number, got {value!r}')
        if positive and not value > 0:
            raise self.error(key, f'must be positive, got {value}')
        return value

    def boolean(self, key) -> bool:
        value = self.require(key)
        if not isinstance(value, bool):
            raise self.error(key, f'expected true or false, got {value!r}')
        return value

    def string(self, key, choices=None, optional=False) -> Optional[str]:
        value = self.obj.get(key) if optional else self.require(key)
        if value is None and optional:
            return None
        if not isinstance(value, str):
            raise self.error(key, f'expected a string, got {value!r}')
        if choices is not None and value not in choices:
            raise self.error(key, f'must be one of {tuple(choices)}, got {value!r}')
        return value

    def array(self, key, shape_tail, dtype=np.float64) -> np.ndarray:
        value = self.require(key)
        try:
            arr = np.array(value, dtype=dtype)
        except (ValueError, TypeError):
            raise self.error(key, 'expected a numeric array') from None
        if arr.ndim != 1 + len(shape_tail) or arr.shape[1:] != tuple(shape_tail):
            if arr.size == 0 and arr.ndim == 1:
                return arr.reshape((0,) + tuple(shape_tail))
            raise self.error(key, f'expected shape (N, {", ".join(map(str, shape_tail))}), got {arr.shape}')
        if not np.isfinite(arr).all():
            raise self.error(key, 'holds non-finite values')
        return arr


def _dump_json(obj, indent=None) -> str:
    separators = (',', ': ') if indent else (',', ':')
    return json.dumps(obj, sort_keys=True, indent=indent, separators=separators, allow_nan=False) + '\n'


def _json_number(value):
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else float(value)
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    return value


# voxel grids

def sidecar_path(path) -> str:
    return os.fspath(path) + SIDECAR_SUFFIX


def voxel_header(grid: VoxelGrid) -> dict:
    return {
        'format': VOXEL_FORMAT,
        'frames': grid.frames,
        'bins': grid.bins,
        'height': grid.height,
        'width': grid.width,
        'fps': _json_number(grid.fps),
        'normalized': bool(grid.normalized),
        'norm_mode': grid.norm_mode,
        'mask_applied': bool(grid.mask_applied),
        'dtype': VOXEL_DTYPE,
        'layout': VOXEL_LAYOUT,
    }


def write_voxel_grid(path, grid: VoxelGrid):
    """Raw little-endian float32 [T][B][H][W] payload plus a JSON header at ``path``.json."""
    grid.check()
    atomic_write(path, np.ascontiguousarray(grid.values, dtype=VOXEL_DTYPE).tobytes())
    atomic_write_text(sidecar_path(path), _dump_json(voxel_header(grid), indent=2))
    logger.debug('wrote %s grid to %s', grid.values.shape, path)


def parse_voxel_header(data: bytes) -> dict:
    obj, text = _parse_json(data)
    fields = _Fields(obj, text)
    if fields.string('format') != VOXEL_FORMAT:
        raise fields.error('format', f'expected {VOXEL_FORMAT!r}')
    fields.string('dtype', (VOXEL_DTYPE,))
    fields.string('layout', (VOXEL_LAYOUT,))
    return {
        'shape': (fields.integer('frames'), fields.integer('bins', 1),
                  fields.integer('height'), fields.integer('width')),
        'fps': fields.number('fps', positive=True),
        'normalized': fields.boolean('normalized'),
        'norm_mode': fields.string('norm_mode', NORM_MODES, optional=True),
        'mask_applied': fields.boolean('mask_applied'),
    }


def decode_voxel_payload(header: dict, payload: bytes) -> VoxelGrid:
    shape = header['shape']
    expected = int(np.prod(shape, dtype=object)) * 4
    if len(payload) < expected:
        raise FormatError(len(payload), f'truncated payload: {len(payload)} of {expected} bytes')
    if len(payload) > expected:
        raise FormatError(expected, f'{len(payload) - expected} trailing payload bytes')
    flat = np.frombuffer(payload, dtype=VOXEL_DTYPE).astype(np.float32)
    if header['normalized']:
        k = _first(~((flat >= 0) & (flat <= 1)))
        if k is not None:
            raise FormatError(4 * k, f'normalized grid holds {flat[k]} outside [0, 1]')
    return VoxelGrid(values=flat.reshape(shape), fps=header['fps'], normalized=header['normalized'],
                     norm_mode=header['norm_mode'], mask_applied=header['mask_applied'])


def decode_voxel_grid(header_bytes: bytes, payload: bytes) -> VoxelGrid:
    return decode_voxel_payload(parse_voxel_header(header_bytes), payload)


@_reader
def read_voxel_grid(path) -> VoxelGrid:
    """Read a voxel payload and its ``.json`` header; header faults name the header file."""
    header_path = sidecar_path(path)
    try:
        header = parse_voxel_header(_read_bytes(header_path))
    except FormatError as e:
        raise e.with_path(header_path)
    return decode_voxel_payload(header, _read_bytes(path))


# netpbm: masks and frames

class _NetpbmParser:

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _skip(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos:self.pos + 1]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == b'#':
                end = data.find(b'\n', self.pos)
                self.pos = n if end < 0 else end + 1
            else:
                return

    def magic(self) -> bytes:
        if len(self.data) < 2 or self.data[:1] != b'P':
            raise FormatError(0, f'not a netpbm file (magic {self.data[:2]!r})')
        self.pos = 2
        return self.data[:2]

    def integer(self, what: str, lo: int, hi: int) -> int:
        self._skip()
        start = self.pos
        m = _TOKEN.match(self.data, start)
        if m is None:
            raise FormatError(start, f'expected {what}, got end of file')
        token = m.group()
        if b'#' in token:
            token = token[:token.index(b'#')]
        self.pos = start + len(token)
        if not token.isdigit():
            raise FormatError(start, f'{what} is not a non-negative integer: {token[:16]!r}')
        value = int(token)
        if not lo <= value <= hi:
            raise FormatError(start, f'{what} {value} outside [{lo}, {hi}]')
        return value

    def plain_bits(self, n: int) -> np.ndarray:
        """P1 raster: n digits 0/1, whitespace optional between them."""
        raw = np.frombuffer(self.data, dtype=np.uint8, offset=self.pos)
        keep = ~np.isin(raw, np.frombuffer(_WHITESPACE, dtype=np.uint8))
        where = np.flatnonzero(keep) + self.pos
        digits = raw[keep]
        if len(digits) < n:
            raise FormatError(len(self.data), f'truncated raster: {len(digits)} of {n} values')
        if len(digits) > n:
            raise FormatError(int(where[n]), 'trailing data after raster')
        k = _first((digits != ord('0')) & (digits != ord('1')))
        if k is not None:
            raise FormatError(int(where[k]), f'bad bit {bytes(digits[k:k + 1])!r}')
        return digits == ord('1')

    def plain_values(self, n: int, maxval: int) -> np.ndarray:
        matches = list(_TOKEN.finditer(self.data, self.pos))
        if len(matches) < n:
            raise FormatError(len(self.data), f'truncated raster: {len(matches)} of {n} values')
        if len(matches) > n:
            raise FormatError(matches[n].start(), 'trailing data after raster')
        values = np.empty(n, dtype=np.int64)
        for i, m in enumerate(matches):
            token = m.group()
            if not token.isdigit() or len(token) > 5:
                raise FormatError(m.start(), f'bad sample {token[:16]!r}')
            values[i] = int(token)
        k = _first(values > maxval)
        if k is not None:
            raise FormatError(matches[k].start(), f'sample {values[k]} exceeds maxval {maxval}')
        return values

    def binary_values(self, n: int, maxval: int) -> np.ndarray:
        if self.pos >= len(self.data) or self.data[self.pos:self.pos + 1] not in _WHITESPACE:
            raise FormatError(self.pos, 'expected a single whitespace byte before the raster')
        start = self.pos + 1
        width = 1 if maxval < 256 else 2
        need = n * width
        have = len(self.data) - start
        if have < need:
            raise FormatError(len(self.data), f'truncated raster: {have} of {need} bytes')
        if have > need:
            raise FormatError(start + need, 'trailing data after raster')
        values = np.frombuffer(self.data, dtype='u1' if width == 1 else '>u2', count=n, offset=start)
        values = values.astype(np.int64)
        k = _first(values > maxval)
        if k is not None:
            raise FormatError(start + k * width, f'sample {values[k]} exceeds maxval {maxval}')
        return values


_MAX_SIDE = 65535


def _header(parser: _NetpbmParser, with_maxval: bool):
    width = parser.integer('width', 0, _MAX_SIDE)
    height = parser.integer('height', 0, _MAX_SIDE)
    maxval = parser.integer('maxval', 1, 65535) if with_maxval else 1
    return height, width, maxval


def decode_mask(data: bytes) -> Union[BinaryMask, SoftMask]:
    parser = _NetpbmParser(data)
    magic = parser.magic()
    if magic == b'P1':
        height, width, _ = _header(parser, False)
        return BinaryMask(parser.plain_bits(height * width).reshape(height, width))
    if magic == b'P2':
        height, width, maxval = _header(parser, True)
        values = parser.plain_values(height * width, maxval)
        return SoftMask((values / maxval).reshape(height, width))
    raise FormatError(0, f'unsupported mask type {magic!r} (expected plain P1 or P2)')


@_reader
def read_mask(path) -> Union[BinaryMask, SoftMask]:
    """Plain PBM (P1) to BinaryMask, plain PGM (P2) to SoftMask."""
    return decode_mask(_read_bytes(path))


def _rows(tokens: List[str], width: int, per_line: int) -> List[str]:
    lines = []
    for start in range(0, len(tokens), width or 1):
        row = tokens[start:start + width]
        lines.extend(' '.join(row[i:i + per_line]) for i in range(0, len(row), per_line))
    return lines


def encode_pbm(mask: BinaryMask) -> bytes:
    bits = np.asarray(mask.bits, dtype=bool)
    height, width = bits.shape
    tokens = np.where(bits.reshape(-1), '1', '0').tolist()
    lines = ['P1', f'{width} {height}'] + _rows(tokens, width, PBM_VALUES_PER_LINE)
    return ('\n'.join(lines) + '\n').encode('ascii')


def encode_pgm(values: np.ndarray, maxval: int = SOFT_MAXVAL) -> bytes:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValidationError(f'expected an H x W image, got {values.shape}')
    if values.size and (not np.isfinite(values).all() or values.min() < 0 or values.max() > 1):
        raise ValidationError('image values must lie in [0, 1]')
    height, width = values.shape
    q = np.rint(values * maxval).astype(np.int64).reshape(-1)
    lines = ['P2', f'{width} {height}', str(maxval)] + _rows([str(v) for v in q.tolist()], width,
                                                               PGM_VALUES_PER_LINE)
    return ('\n'.join(lines) + '\n').encode('ascii')


def write_mask(path, mask: Union[BinaryMask, SoftMask]):
    """Binary masks as plain PBM; soft masks as plain PGM with maxval 65535."""
    if isinstance(mask, BinaryMask):
        atomic_write(path, encode_pbm(mask))
    elif isinstance(mask, SoftMask):
        atomic_write(path, encode_pgm(mask.values))
    else:
        raise TypeError(f'cannot write {type(mask).__name__} as a mask')


def decode_frame(data: bytes) -> np.ndarray:
    parser = _NetpbmParser(data)
    magic = parser.magic()
    if magic not in (b'P2', b'P3', b'P5', b'P6'):
        raise FormatError(0, f'unsupported frame type {magic!r} (expected P2, P3, P5 or P6)')
    height, width, maxval = _header(parser, True)
    channels = 3 if magic in (b'P3', b'P6') else 1
    n = height * width * channels
    if magic in (b'P2', b'P3'):
        values = parser.plain_values(n, maxval)
    else:
        values = parser.binary_values(n, maxval)
    image = values.astype(np.float64) / maxval
    if channels == 3:
        return np.clip(rgb_to_gray(image.reshape(height, width, 3)), 0.0, 1.0)
    return image.reshape(height, width)


@_reader
def read_frame(path) -> np.ndarray:
    """PGM (P2/P5) or PPM (P3/P6) to H x W float intensities in [0, 1]."""
    return decode_frame(_read_bytes(path))


def write_frame(path, frame: np.ndarray, maxval: int = SOFT_MAXVAL):
    atomic_write(path, encode_pgm(frame, maxval))


# timestamps for frame sequences

@_reader
def read_timestamps(path) -> List[int]:
    """One integer nanosecond timestamp per line; ``#`` starts a comment."""
    data = _read_bytes(path)
    timestamps, offsets = [], []
    offset = 0
    for line in data.splitlines(keepends=True):
        body = line.split(b'#', 1)[0]
        token = body.strip()
        if token:
            start = offset + body.index(token)
            text = token.decode('ascii', errors='replace')
            if not re.fullmatch(r'[+-]?\d+', text):
                raise FormatError(start, f'bad timestamp {text[:20]!r}')
            timestamps.append(int(text))
            offsets.append(start)
        offset += len(line)
    dup = [t for t, c in Counter(timestamps).items() if c > 1]
    if dup:
        raise ConfigError(f'{path}: duplicate timestamp {dup[0]}')
    return timestamps


def write_timestamps(path, timestamps):
    atomic_write_text(path, ''.join(f'{int(t)}\n' for t in timestamps))


# meshes (OBJ subset)

_IGNORED_OBJ = ('vn', 'vt', 'vp', 'o', 'g', 's', 'l', 'mtllib', 'usemtl')


def decode_mesh(data: bytes) -> TriangleMesh:
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        raise FormatError(e.start, f'invalid UTF-8: {e.reason}') from None
    vertices, faces, face_offsets = [], [], []
    ignored = Counter()
    offset = 0
    for line in text.splitlines(keepends=True):
        start = offset
        offset += len(line.encode('utf-8'))
        parts = line.split('#', 1)[0].split()
        if not parts:
            continue
        key, args = parts[0], parts[1:]
        if key == 'v':
            if len(args) < 3:
                raise FormatError(start, f'vertex needs 3 coordinates, got {len(args)}')
            try:
                xyz = [float(a) for a in args[:3]]
            except ValueError:
                raise FormatError(start, f'bad vertex coordinates {args[:3]}') from None
            if not np.isfinite(xyz).all():
                raise FormatError(start, 'non-finite vertex coordinate')
            vertices.append(xyz)
        elif key == 'f':
            if len(args) < 3:
                raise FormatError(start, f'face needs at least 3 vertices, got {len(args)}')
            try:
                idx = [int(a.split('/', 1)[0]) for a in args]
            except ValueError:
                raise FormatError(start, f'bad face indices {args}') from None
            # polygons are split into a triangle fan
            for i in range(1, len(idx) - 1):
                faces.append((idx[0], idx[i], idx[i + 1]))
                face_offsets.append(start)
        else:
            ignored[key] += 1

    if ignored:
        unknown = sorted(k for k in ignored if k not in _IGNORED_OBJ)
        log = logger.warning if unknown else logger.debug
        log('ignored OBJ lines: %s', ', '.join(f'{k} x{c}' for k, c in sorted(ignored.items())))
    n = len(vertices)
    for face, start in zip(faces, face_offsets):
        for i in face:
            if not 1 <= i <= n:
                raise FaceIndexError(start, f'face index {i} outside 1..{n} (OBJ indices are 1-based)')
    return TriangleMesh.from_arrays(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                                    np.array(faces, dtype=np.int64).reshape(-1, 3) - 1)


@_reader
def read_mesh(path) -> TriangleMesh:
    """``v x y z`` and ``f i j k`` lines of an OBJ file; other keywords are skipped."""
    return decode_mesh(_read_bytes(path))


def encode_mesh(mesh: TriangleMesh) -> bytes:
    mesh.check()
    lines = [f'v {x!r} {y!r} {z!r}' for x, y, z in mesh.vertices.tolist()]
    lines += [f'f {i + 1} {j + 1} {k + 1}' for i, j, k in mesh.faces.tolist()]
    return ('\n'.join(lines) + '\n').encode('ascii') if lines else b''


def write_mesh(path, mesh: TriangleMesh):
    atomic_write(path, encode_mesh(mesh))


# poses

def pose_document(record: PoseRecord, fps=None) -> dict:
    if record.body is None and record.head is None:
        raise ValidationError('a pose record needs a body trajectory or head poses')
    if record.body is not None:
        record.body.check()
        fps = record.body.fps
    if fps is None:
        raise ValidationError('fps is required when writing head poses only')
    doc = {'format': POSE_FORMAT, 'units': LENGTH_UNITS, 'fps': _json_number(fps)}
    if record.body is not None:
        doc['body'] = {
            'positions': record.body.positions.tolist(),
            'up_axis': record.body.up_axis,
            'joint_names': list(record.body.joint_names) if record.body.joint_names is not None else None,
        }
    if record.head is not None:
        record.head.check()
        if record.body is not None and record.head.frames != record.body.frames:
            raise ValidationError('body trajectory and head poses differ in length')
        doc['head'] = {
            'rotations': record.head.rotations.tolist(),
            'translations': record.head.translations.tolist(),
        }
    return doc


def write_poses(path, record: PoseRecord, fps=None):
    """JSON with units "mm" and fps; ``fps`` is needed only for head-only records."""
    atomic_write_text(path, _dump_json(pose_document(record, fps)))


def decode_poses(data: bytes) -> PoseRecord:
    obj, text = _parse_json(data)
    fields = _Fields(obj, text)
    if obj.get('format', POSE_FORMAT) != POSE_FORMAT:
        raise fields.error('format', f'expected {POSE_FORMAT!r}')
    fields.string('units', (LENGTH_UNITS,))
    fps = fields.number('fps', positive=True)
    body = head = None

    if obj.get('body') is not None:
        if not isinstance(obj['body'], dict):
            raise fields.error('body', 'expected an object')
        b = _Fields(obj['body'], text, 'body.')
        positions = np.array(b.require('positions'), dtype=np.float64)
        if positions.ndim != 3 or positions.shape[2] != 3:
            raise b.error('positions', 'expected a T x J x 3 array')
        if not np.isfinite(positions).all():
            raise b.error('positions', 'holds non-finite values')
        up = b.string('up_axis', UP_AXES, optional=True) or 'z'
        names = b.get('joint_names')
        if names is not None and (not isinstance(names, list) or not all(isinstance(n, str) for n in names)):
            raise b.error('joint_names', 'expected a list of strings')
        body = JointTrajectory(positions, fps, up, tuple(names) if names is not None else None)
        try:
            body.check()
        except EgovoxError as e:
            raise b.error('positions', str(e)) from None

    if obj.get('head') is not None:
        if not isinstance(obj['head'], dict):
            raise fields.error('head', 'expected an object')
        h = _Fields(obj['head'], text, 'head.')
        rotations = np.array(h.require('rotations'), dtype=np.float64)
        if rotations.ndim != 3 or rotations.shape[1:] != (3, 3):
            raise h.error('rotations', f'expected a T x 3 x 3 array, got {rotations.shape}')
        translations = h.array('translations', (3,))
        head = HeadPoseSequence(rotations, translations)
        try:
            head.check()
        except EgovoxError as e:
            raise h.error('rotations', str(e)) from None

    if body is None and head is None:
        raise SchemaError(0, 'pose file holds neither body nor head')
    if body is not None and head is not None and body.frames != head.frames:
        raise fields.error('head', f'{head.frames} head frames for {body.frames} body frames')
    return PoseRecord(body=body, head=head)


@_reader
def read_poses(path) -> PoseRecord:
    return decode_poses(_read_bytes(path))


# camera intrinsics

def write_intrinsics(path, K: CameraIntrinsics):
    K.check()
    atomic_write_text(path, _dump_json({k: _json_number(v) for k, v in K._asdict().items()}, indent=2))


@_reader
def read_intrinsics(path) -> CameraIntrinsics:
    obj, text = _parse_json(_read_bytes(path))
    fields = _Fields(obj, text)
    K = CameraIntrinsics(fx=fields.number('fx'), fy=fields.number('fy'),
                         cx=fields.number('cx'), cy=fields.number('cy'),
                         width=fields.integer('width', 1), height=fields.integer('height', 1))
    try:
        return K.check()
    except EgovoxError as e:
        raise SchemaError(0, str(e)) from None


# reports

def write_report(path, report):
    """Any report with ``to_dict`` (MetricReport, SegmentationReport) as JSON."""
    doc = dict(report.to_dict())
    doc['format'] = REPORT_FORMAT
    atomic_write_text(path, _dump_json(doc, indent=2))


@_reader
def read_report(path) -> MetricReport:
    obj, text = _parse_json(_read_bytes(path))
    if obj.get('format') != REPORT_FORMAT:
        raise SchemaError(_key_offset(text, 'format'), f'expected format {REPORT_FORMAT!r}')
    if not isinstance(obj.get('metrics'), dict):
        raise SchemaError(_key_offset(text, 'metrics'), 'missing metrics object')
    return MetricReport.from_dict(obj)
