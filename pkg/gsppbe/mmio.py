"""
    mmio.py
    ~~~~~~~

    Matrix Market reading and writing. Matrices are written in coordinate
    format (``complex general``, or ``complex hermitian`` with the lower
    triangle only); vectors in array format. Values use the shortest
    decimal that reads back to the same double, so a write-read cycle is
    bit-exact.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import logging

import numpy as np

from gsppbe.errors import MatrixMarketError
from gsppbe.utils import atomic_write, format_real

logger = logging.getLogger('gsppbe.mmio')

BANNER = '%%MatrixMarket'
FIELDS = ('real', 'integer', 'complex')
SYMMETRIES = ('general', 'symmetric', 'hermitian', 'skew-symmetric')


def _entry(z):
    return f'{format_real(z.real)} {format_real(z.imag)}'


def write_matrix(path, M, hermitian=False):
    """Writes the nonzeros of `M` in coordinate format.

    Args:
        path (str)
        M - complex matrix
        hermitian (bool) - store the lower triangle with the hermitian
                           qualifier; `M` must be exactly Hermitian
    """
    M = np.asarray(M, dtype=complex)
    if hermitian and not np.array_equal(M, M.conj().T):
        raise ValueError(f'{path}: matrix is not Hermitian')
    rows, cols = np.nonzero(M)
    if hermitian:
        keep = rows >= cols
        rows, cols = rows[keep], cols[keep]
    # column-major, like the array format
    order = np.lexsort((rows, cols))
    rows, cols = rows[order], cols[order]
    symmetry = 'hermitian' if hermitian else 'general'
    with atomic_write(path) as fh:
        fh.write(f'{BANNER} matrix coordinate complex {symmetry}\n')
        fh.write(f'{M.shape[0]} {M.shape[1]} {rows.size}\n')
        for i, j in zip(rows, cols):
            fh.write(f'{i + 1} {j + 1} {_entry(M[i, j])}\n')
    logger.debug('wrote %s (%d x %d, %d entries)', path, M.shape[0], M.shape[1], rows.size)


def write_vector(path, v):
    """Writes `v` as an n x 1 array"""
    v = np.asarray(v, dtype=complex).reshape(-1)
    with atomic_write(path) as fh:
        fh.write(f'{BANNER} matrix array complex general\n')
        fh.write(f'{v.size} 1\n')
        for z in v:
            fh.write(f'{_entry(z)}\n')


def _numbers(tokens, field, path, line_number):
    width = 2 if field == 'complex' else 1
    if len(tokens) != width:
        raise MatrixMarketError(path, line_number, f'expected {width} value(s), got {len(tokens)}')
    try:
        if field == 'integer':
            return complex(int(tokens[0]), 0)
        values = [float(t) for t in tokens]
    except ValueError:
        raise MatrixMarketError(path, line_number, f'not a number: {" ".join(tokens)}')
    return complex(values[0], values[1] if width == 2 else 0.0)


def _ints(tokens, count, path, line_number, what):
    if len(tokens) != count:
        raise MatrixMarketError(path, line_number, f'{what} needs {count} integers, got {len(tokens)}')
    try:
        values = [int(t) for t in tokens]
    except ValueError:
        raise MatrixMarketError(path, line_number, f'{what} is not integer: {" ".join(tokens)}')
    if any(v < 0 for v in values):
        raise MatrixMarketError(path, line_number, f'{what} has a negative entry')
    return values


def read_matrix(path):
    """Reads a Matrix Market file into a dense complex array.

    Supports coordinate and array formats with real, integer or complex
    fields and general, symmetric, hermitian or skew-symmetric storage.

    Raises:
        MatrixMarketError: naming the file and the offending line
    """
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise MatrixMarketError(path, 0, f'cannot read: {e.strerror or e}')
    if not lines:
        raise MatrixMarketError(path, 1, 'empty file')

    header = lines[0].split()
    if len(header) != 5 or header[0] != BANNER or header[1].lower() != 'matrix':
        raise MatrixMarketError(path, 1, f'bad banner: {lines[0]!r}')
    layout, field, symmetry = (h.lower() for h in header[2:])
    if layout not in ('coordinate', 'array'):
        raise MatrixMarketError(path, 1, f'unsupported format {layout!r}')
    if field not in FIELDS:
        raise MatrixMarketError(path, 1, f'unsupported field {field!r}')
    if symmetry not in SYMMETRIES:
        raise MatrixMarketError(path, 1, f'unsupported symmetry {symmetry!r}')
    if symmetry == 'hermitian' and field != 'complex':
        raise MatrixMarketError(path, 1, 'hermitian storage needs a complex field')

    body = [
        (number, line.split())
        for number, line in enumerate(lines[1:], start=2)
        if line.strip() and not line.lstrip().startswith('%')
    ]
    if not body:
        raise MatrixMarketError(path, len(lines) + 1, 'missing size line')

    size_line, size_tokens = body[0]
    entries = body[1:]
    if layout == 'coordinate':
        rows, cols, nnz = _ints(size_tokens, 3, path, size_line, 'size line')
        expected = nnz
    else:
        rows, cols = _ints(size_tokens, 2, path, size_line, 'size line')
    if symmetry != 'general' and rows != cols:
        raise MatrixMarketError(path, size_line, f'{symmetry} matrix must be square')

    M = np.zeros((rows, cols), dtype=complex)
    if layout == 'coordinate':
        for number, tokens in entries[:expected]:
            if len(tokens) < 2:
                raise MatrixMarketError(path, number, 'entry needs row and column indices')
            i, j = _ints(tokens[:2], 2, path, number, 'index')
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise MatrixMarketError(path, number, f'index ({i}, {j}) outside {rows} x {cols}')
            value = _numbers(tokens[2:], field, path, number)
            _place(M, i - 1, j - 1, value, symmetry, path, number)
    else:
        positions = _array_positions(rows, cols, symmetry)
        expected = len(positions)
        for (number, tokens), (i, j) in zip(entries, positions):
            _place(M, i, j, _numbers(tokens, field, path, number), symmetry, path, number)

    if len(entries) < expected:
        last = entries[-1][0] if entries else size_line
        raise MatrixMarketError(
            path, last + 1, f'file ends after {len(entries)} of {expected} entries'
        )
    if len(entries) > expected:
        raise MatrixMarketError(path, entries[expected][0], f'more than the {expected} declared entries')
    return M


def _array_positions(rows, cols, symmetry):
    if symmetry == 'general':
        return [(i, j) for j in range(cols) for i in range(rows)]
    strict = symmetry == 'skew-symmetric'
    return [(i, j) for j in range(cols) for i in range(j + 1 if strict else j, rows)]


def _place(M, i, j, value, symmetry, path, number):
    if symmetry == 'general':
        M[i, j] = value
        return
    if i < j:
        raise MatrixMarketError(path, number, f'{symmetry} storage takes the lower triangle only')
    if symmetry == 'hermitian':
        if i == j and value.imag != 0:
            raise MatrixMarketError(path, number, 'hermitian diagonal entry must be real')
        M[i, j] = value
        M[j, i] = value.conjugate()
    elif symmetry == 'symmetric':
        M[i, j] = M[j, i] = value
    else:
        if i == j:
            raise MatrixMarketError(path, number, 'skew-symmetric storage has no diagonal')
        M[i, j] = value
        M[j, i] = -value


def read_vector(path):
    """Reads an n x 1 (or 1 x n) Matrix Market file as a 1-D array"""
    M = read_matrix(path)
    if 1 not in M.shape:
        raise MatrixMarketError(path, 2, f'expected a vector, got a {M.shape[0]} x {M.shape[1]} matrix')
    return M.reshape(-1)
