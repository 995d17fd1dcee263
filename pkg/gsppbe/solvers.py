"""
    solvers.py
    ~~~~~~~~~~

    Reference solvers that produce candidate solutions, and the stability
    classification built on the backward errors of their output.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import enum
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np
import scipy.linalg

from gsppbe.config import DEFAULT_SETTINGS, default_threshold
from gsppbe.errors import DimensionError, SingularMatrixError
from gsppbe.structured_be import analyze

logger = logging.getLogger('gsppbe.solvers')

PIVOT_FLOOR = 1e-300


class Method(enum.Enum):
    GMRES = 'gmres'
    GEPP = 'gepp'


@dataclass(frozen=True, eq=False)
class SolveTrace:
    solution: Any
    iterations: int
    relative_residual_history: Tuple[float, ...]
    method: Method
    converged: bool = True
    final_relative_residual: Optional[float] = None


def _rhs(system, f):
    f = system.rhs() if f is None else np.asarray(f, dtype=complex).reshape(-1)
    if f.shape != (system.n + system.m,):
        raise DimensionError(f'right-hand side has length {f.size}, expected {system.n + system.m}')
    return f


def _relative_residual(B, x, f):
    f_norm = np.linalg.norm(f)
    return float(np.linalg.norm(f - B @ x) / f_norm) if f_norm else 0.0


def _givens(a, b):
    """(c, s, rho) with [[c, s], [-conj(s), c]] @ [a, b] = [rho, 0], c real"""
    if b == 0:
        return 1.0, 0.0, a
    if a == 0:
        return 0.0, 1.0, b
    rho = math.hypot(abs(a), abs(b))
    phase = a / abs(a)
    return abs(a) / rho, phase * np.conj(b) / rho, phase * rho


def gmres(system, f=None, tol=DEFAULT_SETTINGS.gmres_tol, maxit=None):
    """Unrestarted GMRES from the zero vector with modified Gram-Schmidt
    and complex Givens rotations.

    Stops once ||B x_k - f|| / ||f|| < tol (as tracked by the rotations)
    or after `maxit` (default n + m) iterations. Non-convergence is
    reported in the trace, not raised.

    Args:
        system (GsppSystem)
        f - right-hand side, [q; r] by default
        tol (float)
        maxit (int)

    Returns:
        SolveTrace
    """
    if not tol > 0:
        raise ValueError('tol must be positive')
    B = system.matrix()
    b = _rhs(system, f)
    size = b.size
    maxit = size if not maxit else int(maxit)

    beta = float(np.linalg.norm(b))
    if beta == 0:
        return SolveTrace(system.split(np.zeros(size, dtype=complex)), 0, (0.0,), Method.GMRES, True, 0.0)
    history = [1.0]
    if history[0] < tol:
        return SolveTrace(system.split(np.zeros(size, dtype=complex)), 0, tuple(history), Method.GMRES, True, 1.0)

    V = np.zeros((size, maxit + 1), dtype=complex)
    H = np.zeros((maxit + 1, maxit), dtype=complex)
    cs = np.zeros(maxit)
    sn = np.zeros(maxit, dtype=complex)
    g = np.zeros(maxit + 1, dtype=complex)
    g[0] = beta
    V[:, 0] = b / beta

    k = 0
    for j in range(maxit):
        # Arnoldi step
        w = B @ V[:, j]
        for i in range(j + 1):
            H[i, j] = np.vdot(V[:, i], w)
            w = w - H[i, j] * V[:, i]
        h_next = float(np.linalg.norm(w))
        H[j + 1, j] = h_next

        for i in range(j):
            upper = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = upper
        cs[j], sn[j], H[j, j] = _givens(H[j, j], H[j + 1, j])
        H[j + 1, j] = 0

        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        history.append(float(abs(g[j + 1])) / beta)

        if history[-1] < tol or h_next == 0:
            break
        V[:, j + 1] = w / h_next

    y = scipy.linalg.solve_triangular(H[:k, :k], g[:k])
    x = V[:, :k] @ y
    converged = bool(history[-1] < tol)
    final = _relative_residual(B, x, b)
    if not converged:
        logger.warning('GMRES stopped after %d iterations at relative residual %.3e', k, history[-1])
    logger.debug('GMRES: %d iterations, relative residual %.3e', k, final)
    return SolveTrace(system.split(x), k, tuple(history), Method.GMRES, converged, final)


def gepp_solve(system, f=None):
    """Gaussian elimination with row partial pivoting on the assembled
    complex matrix.

    Raises:
        SingularMatrixError: a pivot has magnitude below 1e-300
    """
    B = system.matrix()
    b = _rhs(system, f)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(B)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_FLOOR:
        raise SingularMatrixError(f'pivot {int(pivots.argmin())} has magnitude {pivots.min():.3e}')
    return system.split(scipy.linalg.lu_solve((lu, piv), b))


def solve(system, method, f=None, tol=DEFAULT_SETTINGS.gmres_tol, maxit=None):
    """Runs `method` and always returns a SolveTrace"""
    method = Method(method)
    if method is Method.GMRES:
        return gmres(system, f, tol=tol, maxit=maxit)
    sol = gepp_solve(system, f)
    final = _relative_residual(system.matrix(), sol.x, _rhs(system, f))
    return SolveTrace(sol, 1, (final,), Method.GEPP, True, final)


@dataclass(frozen=True, eq=False)
class StabilityClassification:
    unstructured: float
    structured_sparse: float
    structured: float
    threshold: float
    residual_norm: float
    relative_residual: float

    @property
    def backward_stable(self):
        return self.unstructured <= self.threshold

    @property
    def strongly_backward_stable(self):
        return self.structured_sparse <= self.threshold


def stability_report(system, sol, w=None, threshold=None, settings=DEFAULT_SETTINGS):
    """Labels `sol` backward stable (unstructured error within
    `threshold`) and strongly backward stable (sparse structured error
    within `threshold`). The threshold defaults to the configured
    multiple of unit roundoff.
    """
    threshold = default_threshold(settings) if threshold is None else float(threshold)
    if not threshold > 0:
        raise ValueError('threshold must be positive')
    result = analyze(system, sol, w, sparsity='both', settings=settings)
    return StabilityClassification(
        unstructured=result.unstructured,
        structured_sparse=result.sparse.xi,
        structured=result.dense.xi,
        threshold=threshold,
        residual_norm=result.residual_norm,
        relative_residual=result.relative_residual,
    )
