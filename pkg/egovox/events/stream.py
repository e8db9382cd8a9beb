"""Classes to deal with event streams."""

import logging
from collections import namedtuple
from typing import Iterable, Iterator, List, Sequence

import numpy as np

from ..errors import InvalidRangeError, StructuralError, ValidationError


logger = logging.getLogger(__name__)

NS_PER_SECOND = 1_000_000_000

Event = namedtuple('Event', ['x', 'y', 't', 'p'])
Violation = namedtuple('Violation', ['index', 'message'])


class ValidationReport(namedtuple('ValidationReport', ['violations', 'truncated'])):
    """Result of validate_stream. ``index`` is None for stream-level faults."""

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0

    def __str__(self):
        if self.ok:
            return 'ok'
        lines = [v.message if v.index is None else f'{v.message} at index {v.index}'
                 for v in self.violations]
        if self.truncated:
            lines.append('...')
        return '; '.join(lines)


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype).reshape(-1)
    out.setflags(write=False)
    return out


class EventStream:
    """Time-ordered events of one sensor inside the window [t_begin, t_end).

    Events are held column-wise (x, y, t, p arrays) and are read-only after
    construction. Construction does not validate; use validate_stream or
    ensure_valid.

    >>> s = EventStream.from_events([Event(1, 0, 5, 1), Event(0, 1, 7, -1)], 4, 2, 0, 10)
    >>> len(s), s.duration
    (2, 10)
    >>> list(s)[1]
    Event(x=0, y=1, t=7, p=-1)
    """

    def __init__(self, width: int, height: int, x, y, t, p, t_begin: int, t_end: int):
        self.width = int(width)
        self.height = int(height)
        self.x = _frozen(x, np.int32)
        self.y = _frozen(y, np.int32)
        self.t = _frozen(t, np.int64)
        self.p = _frozen(p, np.int8)
        self.t_begin = int(t_begin)
        self.t_end = int(t_end)
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise StructuralError('event columns have different lengths')

    @classmethod
    def from_events(cls, events: Iterable[Event], width: int, height: int,
                    t_begin: int, t_end: int) -> 'EventStream':
        events = list(events)
        if not events:
            return cls.empty(width, height, t_begin, t_end)
        x, y, t, p = zip(*events)
        return cls(width, height, x, y, t, p, t_begin, t_end)

    @classmethod
    def empty(cls, width: int, height: int, t_begin: int = 0, t_end: int = 0) -> 'EventStream':
        return cls(width, height, [], [], [], [], t_begin, t_end)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[Event]:
        for x, y, t, p in zip(self.x.tolist(), self.y.tolist(), self.t.tolist(), self.p.tolist()):
            yield Event(x, y, t, p)

    def __getitem__(self, idx) -> Event:
        return Event(int(self.x[idx]), int(self.y[idx]), int(self.t[idx]), int(self.p[idx]))

    def __repr__(self):
        return (f'EventStream({len(self)} events, {self.width}x{self.height}, '
                f'[{self.t_begin}, {self.t_end}))')

    @property
    def duration(self) -> int:
        return self.t_end - self.t_begin

    @property
    def shape(self):
        return (self.height, self.width)

    def same_events(self, other: 'EventStream') -> bool:
        """Events and geometry equal (window not compared)."""
        return (self.width == other.width and self.height == other.height
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)
                and np.array_equal(self.t, other.t) and np.array_equal(self.p, other.p))

    def _replace(self, x, y, t, p, t_begin, t_end) -> 'EventStream':
        return EventStream(self.width, self.height, x, y, t, p, t_begin, t_end)

    def with_window(self, t_begin: int, t_end: int) -> 'EventStream':
        """Same events under another window; not validated."""
        return self._replace(self.x, self.y, self.t, self.p, t_begin, t_end)


def validate_stream(stream: EventStream, max_violations: int = 10) -> ValidationReport:
    """Check every EventStream invariant; report the first ``max_violations``
    offending indices instead of failing."""
    found: List[Violation] = []
    if stream.width <= 0 or stream.height <= 0:
        found.append(Violation(None, f'sensor size {stream.width}x{stream.height} not positive'))
    if stream.t_begin > stream.t_end:
        found.append(Violation(None, f'window [{stream.t_begin}, {stream.t_end}) is inverted'))
    if stream.t_begin < 0:
        found.append(Violation(None, 'window begins before t = 0'))

    checks = (
        ((stream.x < 0) | (stream.x >= stream.width), 'x out of bounds'),
        ((stream.y < 0) | (stream.y >= stream.height), 'y out of bounds'),
        ((stream.p != 1) & (stream.p != -1), 'polarity not in {-1,+1}'),
        (stream.t < 0, 't negative'),
        ((stream.t < stream.t_begin) | (stream.t >= stream.t_end), 't outside window'),
    )
    if len(stream) > 1:
        checks += ((np.concatenate([[False], stream.t[1:] < stream.t[:-1]]), 'unsorted'),)
    per_event = []
    total = len(found)
    for bad, message in checks:
        hits = np.flatnonzero(bad)
        total += len(hits)
        per_event.extend(Violation(idx, message) for idx in hits[:max_violations].tolist())
    per_event.sort(key=lambda v: v.index)

    found.extend(per_event)
    return ValidationReport(violations=tuple(found[:max_violations]),
                            truncated=total > max_violations)


def ensure_valid(stream: EventStream):
    report = validate_stream(stream, max_violations=1)
    if not report.ok:
        raise ValidationError(f'invalid event stream: {report}')


def slice_time(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Events with t0 <= t < t1, order preserved, window set to [t0, t1)."""
    t0, t1 = int(t0), int(t1)
    if t0 > t1:
        raise InvalidRangeError(f'slice start {t0} is after slice end {t1}')
    lo = int(np.searchsorted(stream.t, t0, side='left'))
    hi = int(np.searchsorted(stream.t, t1, side='left'))
    return stream._replace(stream.x[lo:hi], stream.y[lo:hi], stream.t[lo:hi], stream.p[lo:hi], t0, t1)


def concat_streams(parts: Sequence[EventStream]) -> EventStream:
    """Join consecutive slices back into one stream."""
    if not parts:
        raise StructuralError('nothing to concatenate')
    first = parts[0]
    for part in parts[1:]:
        if (part.width, part.height) != (first.width, first.height):
            raise StructuralError('streams have different sensor sizes')
    return first._replace(
        np.concatenate([s.x for s in parts]),
        np.concatenate([s.y for s in parts]),
        np.concatenate([s.t for s in parts]),
        np.concatenate([s.p for s in parts]),
        first.t_begin, parts[-1].t_end,
    )


def drop_pixels(stream: EventStream, mask) -> EventStream:
    """Remove the events that fall on set pixels of ``mask`` (H x W booleans
    or anything with a ``bits`` attribute)."""
    bits = np.asarray(getattr(mask, 'bits', mask), dtype=bool)
    if bits.shape != stream.shape:
        raise StructuralError(f'mask is {bits.shape}, stream is {stream.shape}')
    keep = ~bits[stream.y, stream.x]
    return stream._replace(stream.x[keep], stream.y[keep], stream.t[keep], stream.p[keep],
                           stream.t_begin, stream.t_end)
