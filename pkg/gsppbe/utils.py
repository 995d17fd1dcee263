"""General independent utilities"""


import contextlib
import math
import os
import tempfile


def chunks(total, chunk_size):
    """Returns a generator which yields contiguous ``(start, stop)`` index
    ranges covering ``range(total)`` in pieces of (up to) `chunk_size`.

    Usage:
        >>> list(chunks(4, 2))
        [(0, 2), (2, 4)]
        >>> list(chunks(5, 2))
        [(0, 2), (2, 4), (4, 5)]
    """
    if chunk_size < 1:
        raise ValueError('chunk_size must be positive')
    for start in range(0, total, chunk_size):
        yield start, min(start + chunk_size, total)


def display(value, digits=5):
    """Formats a real number with `digits` significant digits in the
    exponent style the reports print.

    Usage:
        >>> display(3.929512e-05)
        '3.9295e-05'
        >>> display(0.0)
        '0.0000e+00'
    """
    return f'{float(value):.{digits - 1}e}'


def numeric_field(value):
    """Report number: full shortest round-trip value plus a display string

    Usage:
        >>> numeric_field(0.5)
        {'value': 0.5, 'display': '5.0000e-01'}
    """
    value = float(value)
    return {'value': value, 'display': display(value)}


def format_real(value):
    """Shortest decimal that reads back to the same double

    Usage:
        >>> format_real(0.1)
        '0.1'
        >>> format_real(-2.0)
        '-2'
        >>> format_real(-0.0)
        '-0.0'
    """
    value = float(value)
    # -0.0 keeps its sign bit through repr
    if value.is_integer() and abs(value) < 1e16 and (value or math.copysign(1.0, value) > 0):
        return str(int(value))
    return repr(value)


@contextlib.contextmanager
def atomic_write(path, mode='w'):
    """Opens a temporary file next to `path` and renames it over `path`
    once the block exits cleanly. On error the temporary file is removed
    and `path` is left untouched.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp)
        raise
