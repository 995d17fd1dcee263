"""Residuals and the normwise (Rigal-Gaches) backward error"""

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from gsppbe.errors import UndefinedBackwardError

logger = logging.getLogger('gsppbe.unstructured')


@dataclass(frozen=True, eq=False)
class ResidualPair:
    """Q = q - E u - F* p and R = r - H u - G p"""

    Q: Any
    R: Any

    @property
    def stacked(self):
        return np.concatenate([self.Q, self.R])

    def norm(self):
        return float(np.linalg.norm(self.stacked))

    def realified(self):
        """[Re Q; Im Q; Re R; Im R]"""
        return np.concatenate([self.Q.real, self.Q.imag, self.R.real, self.R.imag])


def residuals(system, sol):
    sol.check(system)
    u, p = sol.u_hat, sol.p_hat
    Q = system.q - system.E @ u - system.F.conj().T @ p
    R = system.r - system.H @ u - system.G @ p
    return ResidualPair(Q, R)


def rigal_gaches(system, sol):
    """||f - B x|| / sqrt(||B||_F^2 ||x||^2 + ||f||^2)

    Raises:
        UndefinedBackwardError: both ||B||_F ||x|| and ||f|| are zero
    """
    residual = residuals(system, sol).norm()
    scale = system.matrix_norm() * float(np.linalg.norm(sol.x))
    f_norm = float(np.linalg.norm(system.rhs()))
    denominator = math.hypot(scale, f_norm)
    if denominator == 0:
        raise UndefinedBackwardError('||B||_F ||x|| and ||f|| are both zero')
    value = residual / denominator
    logger.debug('unstructured backward error %.4e (residual %.4e)', value, residual)
    return value
