"""
    vecops.py
    ~~~~~~~~~

    Vectorization machinery: vec and the symmetric/skew generator vectors,
    the 0/+-1 basis matrices that rebuild vec from a generator, the
    diagonal scalings that make generator 2-norms equal Frobenius norms,
    and the diagonal mask matrices of a sparsity pattern.

    Generator ordering is column-major over lower-triangular segments:
    for a 3x3 symmetric M, vec_sym(M) = [m11, m21, m31, m22, m32, m33] and
    vec_skew(M) = [m21, m31, m32].

    Every structure is a ``scipy.sparse.csr_matrix``; apply with ``@`` and
    ``.T @``.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import sparse

from gsppbe.errors import DimensionError, StructureError

SQRT2 = math.sqrt(2.0)


class GeneratorKind(enum.Enum):
    Full = 'full'
    SymLower = 'sym'
    SkewStrictLower = 'skew'


def generator_length(kind, rows, cols=None):
    """Length of the generator of a rows x cols (square unless given)
    matrix

    Usage:
        >>> generator_length(GeneratorKind.SymLower, 3)
        6
    """
    cols = rows if cols is None else cols
    if kind is GeneratorKind.Full:
        return rows * cols
    if kind is GeneratorKind.SymLower:
        return rows * (rows + 1) // 2
    return rows * (rows - 1) // 2


@dataclass(frozen=True, eq=False)
class GeneratorVector:
    data: Any
    kind: GeneratorKind
    order: int

    def __post_init__(self):
        data = np.array(self.data, copy=True).reshape(-1)
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    def __len__(self):
        return self.data.size

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def lower_indices(m, strict=False):
    """(rows, cols) of the lower triangle in generator order"""
    cols, rows = np.triu_indices(m, k=1 if strict else 0)
    return rows, cols


def _square(M, name='matrix'):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f'{name} must be square, got shape {M.shape}')
    return M


def vec(M):
    """Column-stacks `M`

    Usage:
        >>> vec([[1, 3], [2, 4]]).data
        array([1, 2, 3, 4])
    """
    M = np.asarray(M)
    return GeneratorVector(M.reshape(-1, order='F'), GeneratorKind.Full, M.shape[0])


def vec_sym(M):
    """Lower-triangular column segments (diagonal included) of a symmetric
    matrix

    Raises:
        StructureError: `M` is not exactly symmetric
    """
    M = _square(M)
    if not np.array_equal(M, M.T):
        raise StructureError('vec_sym needs a symmetric matrix')
    rows, cols = lower_indices(M.shape[0])
    return GeneratorVector(M[rows, cols], GeneratorKind.SymLower, M.shape[0])


def vec_skew(M):
    """Strict-lower column segments of a skew-symmetric matrix

    Raises:
        StructureError: `M` is not exactly skew-symmetric
    """
    M = _square(M)
    if not np.array_equal(M, -M.T):
        raise StructureError('vec_skew needs a skew-symmetric matrix')
    rows, cols = lower_indices(M.shape[0], strict=True)
    return GeneratorVector(M[rows, cols], GeneratorKind.SkewStrictLower, M.shape[0])


def unvec(data, shape):
    data = np.asarray(data)
    if data.size != shape[0] * shape[1]:
        raise DimensionError(f'{data.size} entries cannot fill a {shape} matrix')
    return data.reshape(shape, order='F')


def unvec_sym(data, m):
    data = np.asarray(data)
    if data.size != generator_length(GeneratorKind.SymLower, m):
        raise DimensionError(f'{data.size} entries is not a symmetric generator of order {m}')
    M = np.zeros((m, m), dtype=data.dtype)
    rows, cols = lower_indices(m)
    M[rows, cols] = data
    M[cols, rows] = data
    return M


def unvec_skew(data, m):
    data = np.asarray(data)
    if data.size != generator_length(GeneratorKind.SkewStrictLower, m):
        raise DimensionError(f'{data.size} entries is not a skew generator of order {m}')
    M = np.zeros((m, m), dtype=data.dtype)
    rows, cols = lower_indices(m, strict=True)
    M[rows, cols] = data
    M[cols, rows] = -data
    return M


def _vec_positions(rows, cols, m):
    return cols * m + rows


def build_sym_basis(m):
    """m^2 x m(m+1)/2 matrix J_S with J_S @ vec_sym(M) = vec(M)"""
    rows, cols = lower_indices(m)
    k = rows.size
    off = rows != cols
    ids = np.arange(k)
    out_rows = np.concatenate([_vec_positions(rows, cols, m), _vec_positions(cols[off], rows[off], m)])
    out_cols = np.concatenate([ids, ids[off]])
    return sparse.csr_matrix(
        (np.ones(out_rows.size), (out_rows, out_cols)), shape=(m * m, k)
    )


def build_skew_basis(m):
    """m^2 x m(m-1)/2 matrix J_SK with J_SK @ vec_skew(M) = vec(M). Empty
    (m x 0 columns) for m = 1.
    """
    rows, cols = lower_indices(m, strict=True)
    k = rows.size
    ids = np.arange(k)
    out_rows = np.concatenate([_vec_positions(rows, cols, m), _vec_positions(cols, rows, m)])
    values = np.concatenate([np.ones(k), -np.ones(k)])
    return sparse.csr_matrix(
        (values, (out_rows, np.concatenate([ids, ids]))), shape=(m * m, k)
    )


def _diag(values):
    values = np.asarray(values, dtype=float)
    ids = np.arange(values.size)
    return sparse.csr_matrix((values, (ids, ids)), shape=(values.size, values.size))


def sym_diagonal_positions(m):
    """Generator positions (0-based) that hold diagonal entries"""
    i = np.arange(1, m + 1)
    return (2 * m - (i - 2)) * (i - 1) // 2


def build_scalings(m):
    """(D_S, D_SK): 1 on diagonal positions of the symmetric generator and
    sqrt(2) everywhere else.

    Usage:
        >>> build_scalings(2)[0].diagonal()
        array([1.        , 1.41421356, 1.        ])
    """
    d_sym = np.full(generator_length(GeneratorKind.SymLower, m), SQRT2)
    d_sym[sym_diagonal_positions(m)] = 1.0
    d_skew = np.full(generator_length(GeneratorKind.SkewStrictLower, m), SQRT2)
    return _diag(d_sym), _diag(d_skew)


def _binary(theta):
    theta = np.asarray(theta)
    if theta.ndim != 2:
        raise DimensionError('mask must be a matrix')
    if not np.all((theta == 0) | (theta == 1)):
        raise StructureError('mask entries must be 0 or 1')
    return theta.astype(float)


def mask_generator(theta, kind):
    """Mask entries in the generator coordinates of `kind`"""
    theta = _binary(theta)
    if kind is GeneratorKind.Full:
        return theta.reshape(-1, order='F')
    if theta.shape[0] != theta.shape[1] or not np.array_equal(theta, theta.T):
        raise StructureError(f'{kind.name} masks must be symmetric')
    rows, cols = lower_indices(theta.shape[0], strict=kind is GeneratorKind.SkewStrictLower)
    return theta[rows, cols]


def build_mask_diagonals(theta, kind):
    """Sigma (Full), Phi (SymLower) or Psi (SkewStrictLower) of a mask"""
    return _diag(mask_generator(theta, kind))


def kron(A, B):
    """Kronecker product; sparse if either factor is sparse

    Usage:
        >>> kron([[1, 2]], [[3, 4]])
        array([[3, 4, 6, 8]])
    """
    if sparse.issparse(A) or sparse.issparse(B):
        return sparse.kron(A, B, format='csr')
    return np.kron(np.asarray(A), np.asarray(B))


@dataclass(frozen=True, eq=False)
class SelectorBundle:
    """Everything needed to map generator coordinates of one masked
    square block back to vec coordinates
    """

    J_S: Any
    J_SK: Any
    D_S: Any
    D_SK: Any
    Phi: Any
    Psi: Any
    Sigma: Any

    @classmethod
    def build(cls, theta):
        theta = _binary(theta)
        m = theta.shape[0]
        D_S, D_SK = build_scalings(m)
        return cls(
            J_S=build_sym_basis(m),
            J_SK=build_skew_basis(m),
            D_S=D_S,
            D_SK=D_SK,
            Phi=build_mask_diagonals(theta, GeneratorKind.SymLower),
            Psi=build_mask_diagonals(theta, GeneratorKind.SkewStrictLower),
            Sigma=build_mask_diagonals(theta, GeneratorKind.Full),
        )

    @property
    def sym_map(self):
        """J_S Phi D_S^-1: scaled symmetric generator -> vec"""
        return (self.J_S @ self.Phi @ _diag(1.0 / self.D_S.diagonal())).tocsr()

    @property
    def skew_map(self):
        """J_SK Psi D_SK^-1: scaled skew generator -> vec"""
        return (self.J_SK @ self.Psi @ _diag(1.0 / self.D_SK.diagonal())).tocsr()
