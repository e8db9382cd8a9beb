"""Pipeline configuration: defaults, ``key = value`` files and flag overrides."""

import logging
import re

from .errors import ConfigError
from .events.voxel import NORM_MODES
from .pipeline import ORDERS
from .pose.trajectory import UP_AXES


logger = logging.getLogger(__name__)

_DEFAULTS = {
    'fps': 30,
    'bins': 3,
    'norm': 'frame',
    'order': 'mask-then-normalize',
    'c_pos': 0.2,
    'c_neg': 0.2,
    'eps_log': 1e-3,
    'refractory_ns': 0,
    'threshold_sigma': 0.0,
    'seed': 0,
    'dilate': 2,
    'z_near': 1e-4,
    'fs_thresh_mm': 50.0,
    'floor_mm': 0.0,
    'up': 'z',
    'tau': 0.5,
    'clamp_eps': 1e-7,
    'jobs': 1,
}

# published settings ("30 FPS and three time bins"); the rest are egovox choices
PUBLISHED_KEYS = {'fps', 'bins'}

CHOICES = {
    'norm': NORM_MODES,
    'order': ORDERS,
    'up': UP_AXES,
}

HELP = {
    'fps': 'voxel frame rate',
    'bins': 'time bins per frame',
    'norm': 'normalization scope',
    'order': 'masking and normalization order',
    'c_pos': 'positive contrast threshold (log units)',
    'c_neg': 'negative contrast threshold (log units)',
    'eps_log': 'offset inside log(I + eps)',
    'refractory_ns': 'per-pixel refractory period (ns)',
    'threshold_sigma': 'relative per-pixel threshold jitter',
    'seed': 'seed for threshold jitter',
    'dilate': 'mask dilation radius (px)',
    'z_near': 'near plane for projection (m)',
    'fs_thresh_mm': 'foot skating height threshold (mm)',
    'floor_mm': 'floor height (mm)',
    'up': 'up axis of joint trajectories',
    'tau': 'soft mask threshold for IoU',
    'clamp_eps': 'BCE prediction clamp',
    'jobs': 'worker processes',
}

_LINE = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_-]*)\s*=\s*(.*?)\s*$')


def canonical_key(key: str) -> str:
    return key.strip().replace('-', '_')


def help_text(key: str) -> str:
    text = f'{HELP[key]} (default: {_DEFAULTS[key]})'
    if key not in PUBLISHED_KEYS:
        text += ' [unpublished default]'
    return text


def _coerce(key: str, value):
    default = _DEFAULTS[key]
    try:
        if key == 'fps':
            fps = float(value)
            return int(fps) if fps.is_integer() else fps
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f'{key}: cannot read {value!r} as {type(default).__name__}') from None


class PipelineConfig:
    """Attribute access over the merged settings."""

    def __init__(self, d=None, **overrides):
        self.__dict__ = dict(_DEFAULTS)
        self._explicit = set()
        self.update(d or {})
        self.update(overrides)

    def update(self, d):
        for key, value in d.items():
            key = canonical_key(key)
            if key not in _DEFAULTS:
                raise ConfigError(f'unknown configuration key {key!r}')
            if value is not None:
                self.__dict__[key] = _coerce(key, value)
                self._explicit.add(key)
        return self

    def is_explicit(self, key: str) -> bool:
        """True if a config file or flag set ``key``."""
        return canonical_key(key) in self._explicit

    @classmethod
    def from_file(cls, path) -> 'PipelineConfig':
        return cls(read_config_file(path))

    def as_dict(self) -> dict:
        return {key: self.__dict__[key] for key in _DEFAULTS}

    def __repr__(self):
        return ' '.join(f'{k}={v}' for k, v in self.as_dict().items())

    def __eq__(self, other):
        return isinstance(other, PipelineConfig) and self.as_dict() == other.as_dict()

    def validate(self) -> 'PipelineConfig':
        checks = (
            (self.fps > 0, f'fps must be positive, got {self.fps}'),
            (self.bins >= 1, f'bins must be >= 1, got {self.bins}'),
            (self.c_pos > 0 and self.c_neg > 0, f'contrast thresholds must be positive, got {self.c_pos}, {self.c_neg}'),
            (self.eps_log > 0, f'eps_log must be positive, got {self.eps_log}'),
            (self.refractory_ns >= 0, f'refractory_ns must be >= 0, got {self.refractory_ns}'),
            (self.threshold_sigma >= 0, f'threshold_sigma must be >= 0, got {self.threshold_sigma}'),
            (self.dilate >= 0, f'dilate must be >= 0, got {self.dilate}'),
            (self.z_near > 0, f'z_near must be positive, got {self.z_near}'),
            (self.fs_thresh_mm > 0, f'fs_thresh_mm must be positive, got {self.fs_thresh_mm}'),
            (0 <= self.tau <= 1, f'tau must lie in [0, 1], got {self.tau}'),
            (0 < self.clamp_eps < 0.5, f'clamp_eps must lie in (0, 0.5), got {self.clamp_eps}'),
            (self.jobs >= 1, f'jobs must be >= 1, got {self.jobs}'),
        )
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        for key, choices in CHOICES.items():
            if self.__dict__[key] not in choices:
                raise ConfigError(f'{key} must be one of {choices}, got {self.__dict__[key]!r}')
        return self


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys may use - or _."""
    values = {}
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split('#', 1)[0]
            if not line.strip():
                continue
            m = _LINE.match(line)
            if m is None:
                raise ConfigError(f'{path}:{lineno}: expected "key = value"')
            key = canonical_key(m.group(1))
            if key not in _DEFAULTS:
                raise ConfigError(f'{path}:{lineno}: unknown configuration key {key!r}')
            if key in values:
                raise ConfigError(f'{path}:{lineno}: {key} set twice')
            values[key] = _coerce(key, m.group(2))
    logger.debug('read %d settings from %s', len(values), path)
    return values


def load_config(path=None, flags=None) -> PipelineConfig:
    """Defaults, then the config file, then explicitly given flags."""
    config = PipelineConfig()
    if path is not None:
        config.update(read_config_file(path))
    if flags:
        config.update({k: v for k, v in flags.items() if v is not None})
    return config.validate()
