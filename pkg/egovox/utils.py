import os
import time
import tempfile


class Timer():

    def __init__(self):
        self.v = time.perf_counter()

    def s(self):
        self.v = time.perf_counter()

    def t(self):
        return time.perf_counter() - self.v


def time_text(t):
    if t >= 3600:
        return '{:.1f}h'.format(t / 3600)
    elif t >= 60:
        return '{:.1f}m'.format(t / 60)
    elif t >= 1:
        return '{:.1f}s'.format(t)
    else:
        return '{:.1f}ms'.format(t * 1000)


def atomic_write(path, data: bytes):
    """Write ``data`` to ``path`` through a temp file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.' + os.path.basename(path) + '.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def atomic_write_text(path, text: str):
    atomic_write(path, text.encode('utf-8'))
