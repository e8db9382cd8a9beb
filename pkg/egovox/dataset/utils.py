import os
import re
from typing import List

import numpy as np


# ITU-R BT.601 luma weights
BT601_WEIGHTS = np.array([0.299, 0.587, 0.114])

FRAME_SUFFIXES = ('.pgm', '.ppm')
MASK_SUFFIX = '.pbm'
SOFT_MASK_SUFFIX = '.pgm'
MESH_SUFFIX = '.obj'

_NUMBER = re.compile(r'(\d+)')


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """H x W x 3 intensities to H x W luma."""
    return np.asarray(rgb, dtype=np.float64) @ BT601_WEIGHTS


def frame_name(k: int, suffix: str) -> str:
    return f'{k:06d}{suffix}'


def natural_key(name: str):
    """Sort key comparing digit runs numerically (frame_2 before frame_10)."""
    return [int(part) if part.isdigit() else part for part in _NUMBER.split(name)]


def list_files(directory, suffixes) -> List[str]:
    """Files in ``directory`` with one of ``suffixes``, in natural order."""
    if isinstance(suffixes, str):
        suffixes = (suffixes,)
    names = [n for n in os.listdir(directory) if n.lower().endswith(tuple(suffixes))]
    return [os.path.join(directory, n) for n in sorted(names, key=natural_key)]
