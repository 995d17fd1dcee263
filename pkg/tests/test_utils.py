import math
import os

import pytest

from gsppbe.utils import atomic_write, chunks, display, format_real, numeric_field

chunk_cases = [
    ((4, 2), [(0, 2), (2, 4)]),
    ((5, 2), [(0, 2), (2, 4), (4, 5)]),
    ((3, 10), [(0, 3)]),
    ((0, 3), []),
]


@pytest.mark.parametrize("args,ranges", chunk_cases)
def test_chunks(args, ranges):
    assert list(chunks(*args)) == ranges


def test_chunks_needs_positive_size():
    with pytest.raises(ValueError):
        list(chunks(3, 0))


display_cases = [
    (3.929512e-05, '3.9295e-05'),
    (0.0, '0.0000e+00'),
    (-1234.5, '-1.2345e+03'),
    (float('inf'), 'inf'),
]


@pytest.mark.parametrize("value,text", display_cases)
def test_display(value, text):
    assert display(value) == text


def test_numeric_field_keeps_full_value():
    field = numeric_field(1 / 3)
    assert field['value'] == 1 / 3
    assert field['display'] == '3.3333e-01'


@pytest.mark.parametrize("value", [0.1, -2.0, 1e-300, 2.0 ** 60, 1 / 3])
def test_format_real_reads_back(value):
    assert float(format_real(value)) == value


def test_format_real_negative_zero():
    assert format_real(-0.0) == '-0.0'
    assert format_real(0.0) == '0'
    assert math.copysign(1.0, float(format_real(-0.0))) == -1.0


def test_atomic_write(tmp_path):
    path = tmp_path / 'out.txt'
    with atomic_write(str(path)) as fh:
        fh.write('done')
    assert path.read_text() == 'done'

    with pytest.raises(RuntimeError):
        with atomic_write(str(path)) as fh:
            fh.write('partial')
            raise RuntimeError('interrupted')
    assert path.read_text() == 'done'
    assert os.listdir(tmp_path) == ['out.txt']
