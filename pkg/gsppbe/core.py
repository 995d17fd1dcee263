"""
    core.py
    ~~~~~~~

    Domain types shared by every module: the block system, the candidate
    solution, sparsity masks, weights and perturbation sets.

    All types are immutable once built; the arrays they hold are
    read-only copies.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import enum
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Union

import numpy as np

from gsppbe.errors import DimensionError, StructureError, WeightError


class StructureCase(enum.Enum):
    """Which blocks are constrained to be Hermitian, and whether H is F"""

    CaseI = 'i'  # E Hermitian, H = F
    CaseII = 'ii'  # G Hermitian, H = F
    CaseIII = 'iii'  # E and G Hermitian

    @classmethod
    def from_tag(cls, tag):
        """Looks a case up by its roman numeral

        Usage:
            >>> StructureCase.from_tag('ii')
            <StructureCase.CaseII: 'ii'>
        """
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise ValueError(f"Unknown structure case '{tag}', expected one of i, ii, iii")

    @property
    def hermitian_E(self):
        return self in (StructureCase.CaseI, StructureCase.CaseIII)

    @property
    def hermitian_G(self):
        return self in (StructureCase.CaseII, StructureCase.CaseIII)

    @property
    def aliases_H(self):
        return self is not StructureCase.CaseIII


class _Excluded(enum.Enum):
    EXCLUDED = 'excluded'

    def __repr__(self):
        return 'EXCLUDED'


#: Weight value meaning "this block admits no perturbation".
EXCLUDED = _Excluded.EXCLUDED

WeightValue = Union[float, _Excluded, None]

MATRIX_BLOCKS = ('E', 'F', 'H', 'G')


def _frozen(value, shape, name, dtype=complex):
    arr = np.array(value, dtype=dtype, copy=True)
    if len(shape) == 1 and arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.shape != shape:
        raise DimensionError(f'{name} has shape {arr.shape}, expected {shape}')
    arr.setflags(write=False)
    return arr


def _is_hermitian(M):
    return bool(np.array_equal(M, M.conj().T))


@dataclass(frozen=True, eq=False)
class GsppSystem:
    """The block system [[E, F*], [H, G]] [u; p] = [q; r].

    Args:
        E (n x n), F (m x n), H (m x n or None), G (m x m), q (n), r (m)
        case (StructureCase)

    For CaseI/CaseII, ``H`` may be ``None`` and is then stored as an
    alias of ``F``; a given ``H`` must equal ``F`` entrywise.
    Hermitian blocks are checked with exact equality.
    """

    E: Any
    F: Any
    H: Any
    G: Any
    q: Any
    r: Any
    case: StructureCase

    def __post_init__(self):
        if not isinstance(self.case, StructureCase):
            raise TypeError('case must be a StructureCase')
        E = np.asarray(self.E)
        if E.ndim != 2 or E.shape[0] != E.shape[1] or E.shape[0] < 1:
            raise DimensionError(f'E must be a non-empty square matrix, got shape {E.shape}')
        G = np.asarray(self.G)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 1:
            raise DimensionError(f'G must be a non-empty square matrix, got shape {G.shape}')
        n, m = E.shape[0], G.shape[0]

        E = _frozen(E, (n, n), 'E')
        F = _frozen(self.F, (m, n), 'F')
        G = _frozen(G, (m, m), 'G')
        q = _frozen(self.q, (n,), 'q')
        r = _frozen(self.r, (m,), 'r')
        if self.H is None:
            if not self.case.aliases_H:
                raise StructureError('CaseIII requires an explicit H block')
            H = F
        else:
            H = _frozen(self.H, (m, n), 'H')
            if self.case.aliases_H:
                if not np.array_equal(H, F):
                    raise StructureError(f'{self.case.name} requires H = F entrywise')
                H = F

        if self.case.hermitian_E and not _is_hermitian(E):
            raise StructureError(f'{self.case.name} requires E to be Hermitian')
        if self.case.hermitian_G and not _is_hermitian(G):
            raise StructureError(f'{self.case.name} requires G to be Hermitian')

        for name, value in zip('EFHGqr', (E, F, H, G, q, r)):
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.E.shape[0]

    @property
    def m(self):
        return self.G.shape[0]

    @property
    def is_real(self):
        return not any(np.any(block.imag) for block in self.blocks().values())

    def blocks(self):
        return {'E': self.E, 'F': self.F, 'H': self.H, 'G': self.G, 'q': self.q, 'r': self.r}

    def matrix(self):
        """The dense (n+m) x (n+m) coefficient matrix"""
        return np.block([[self.E, self.F.conj().T], [self.H, self.G]])

    def rhs(self):
        return np.concatenate([self.q, self.r])

    def matrix_norm(self):
        """Frobenius norm of the coefficient matrix, from its four blocks"""
        return math.sqrt(sum(np.linalg.norm(self.blocks()[b]) ** 2 for b in MATRIX_BLOCKS))

    def split(self, x):
        """Cuts a length n+m vector into a CandidateSolution"""
        x = np.asarray(x)
        if x.shape != (self.n + self.m,):
            raise DimensionError(f'expected a vector of length {self.n + self.m}, got shape {x.shape}')
        return CandidateSolution(x[: self.n], x[self.n :])

    def __repr__(self):
        return f'<GsppSystem case={self.case.value} n={self.n} m={self.m}>'


@dataclass(frozen=True, eq=False)
class CandidateSolution:
    """The computed pair (u_hat, p_hat)"""

    u_hat: Any
    p_hat: Any

    def __post_init__(self):
        u = np.array(self.u_hat, dtype=complex, copy=True).reshape(-1)
        p = np.array(self.p_hat, dtype=complex, copy=True).reshape(-1)
        u.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, 'u_hat', u)
        object.__setattr__(self, 'p_hat', p)

    @property
    def x(self):
        return np.concatenate([self.u_hat, self.p_hat])

    @property
    def is_real(self):
        return not (np.any(self.u_hat.imag) or np.any(self.p_hat.imag))

    def check(self, system):
        if self.u_hat.shape != (system.n,) or self.p_hat.shape != (system.m,):
            raise DimensionError(
                f'solution lengths ({self.u_hat.size}, {self.p_hat.size}) do not '
                f'match the system ({system.n}, {system.m})'
            )


@dataclass(frozen=True, eq=False)
class SparsityPattern:
    """Binary masks of the four matrix blocks"""

    theta_E: Any
    theta_F: Any
    theta_H: Any
    theta_G: Any

    def __post_init__(self):
        for name in ('theta_E', 'theta_F', 'theta_H', 'theta_G'):
            raw = np.asarray(getattr(self, name))
            if raw.ndim != 2:
                raise DimensionError(f'{name} must be a matrix')
            if not np.all((raw == 0) | (raw == 1)):
                raise StructureError(f'{name} has entries outside {{0, 1}}')
            mask = np.array(raw, dtype=np.int8, copy=True)
            mask.setflags(write=False)
            object.__setattr__(self, name, mask)
        n, m = self.theta_E.shape[0], self.theta_G.shape[0]
        expected = {
            'theta_E': (n, n),
            'theta_F': (m, n),
            'theta_H': (m, n),
            'theta_G': (m, m),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(f'{name} has shape {getattr(self, name).shape}, expected {shape}')

    @classmethod
    def ones(cls, n, m):
        """The pattern that places no sparsity restriction"""
        return cls(
            np.ones((n, n), dtype=np.int8),
            np.ones((m, n), dtype=np.int8),
            np.ones((m, n), dtype=np.int8),
            np.ones((m, m), dtype=np.int8),
        )

    def mask(self, block):
        return getattr(self, f'theta_{block}')


@dataclass(frozen=True)
class Weights:
    """Block weights.

    For CaseI/CaseII (alpha1, alpha2, alpha3) weigh (E, F, G) and alpha4
    must be ``None``. For CaseIII (alpha1, alpha2, alpha3, alpha4) weigh
    (E, F, H, G). Any weight may be ``EXCLUDED``.
    """

    alpha1: WeightValue
    alpha2: WeightValue
    alpha3: WeightValue
    beta1: WeightValue
    beta2: WeightValue
    alpha4: WeightValue = None

    def __post_init__(self):
        for name in ('alpha1', 'alpha2', 'alpha3', 'beta1', 'beta2', 'alpha4'):
            value = getattr(self, name)
            if value is None and name == 'alpha4':
                continue
            if value is EXCLUDED:
                continue
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise WeightError(f'{name} must be a positive number or EXCLUDED, got {value!r}')
            if not math.isfinite(value) or value <= 0:
                raise WeightError(f'{name} must be finite and > 0, got {value}')
            object.__setattr__(self, name, value)

    def validate(self, case):
        if case is StructureCase.CaseIII and self.alpha4 is None:
            raise WeightError('CaseIII needs alpha4 (the G weight)')
        if case is not StructureCase.CaseIII and self.alpha4 is not None:
            raise WeightError(f'{case.name} takes no alpha4')
        return self

    def block_weights(self, case):
        """Maps block names to their weight for `case`

        Usage:
            >>> Weights(1, 2, 3, 4, 5).block_weights(StructureCase.CaseI)
            {'E': 1.0, 'F': 2.0, 'G': 3.0, 'q': 4.0, 'r': 5.0}
        """
        self.validate(case)
        weights = {'E': self.alpha1, 'F': self.alpha2}
        if case is StructureCase.CaseIII:
            weights['H'] = self.alpha3
            weights['G'] = self.alpha4
        else:
            weights['G'] = self.alpha3
        weights['q'] = self.beta1
        weights['r'] = self.beta2
        return weights

    def with_excluded(self, block, case):
        """Copy of these weights with `block` ('E', 'F', 'H', 'G', 'q', 'r')
        marked EXCLUDED
        """
        fields = {
            'E': 'alpha1',
            'F': 'alpha2',
            'H': 'alpha3',
            'G': 'alpha4' if case is StructureCase.CaseIII else 'alpha3',
            'q': 'beta1',
            'r': 'beta2',
        }
        if block == 'H' and case.aliases_H:
            raise WeightError(f'{case.name} has no separate H weight')
        values = {
            name: getattr(self, name)
            for name in ('alpha1', 'alpha2', 'alpha3', 'beta1', 'beta2', 'alpha4')
        }
        values[fields[block]] = EXCLUDED
        return Weights(**values)

    def as_list(self, case):
        """sigma vector in block order; EXCLUDED stays as is"""
        return list(self.block_weights(case).values())


@dataclass(frozen=True, eq=False)
class PerturbationSet:
    """Backward perturbations of every block. dH aliases dF for
    CaseI/CaseII.
    """

    dE: Any
    dF: Any
    dH: Any
    dG: Any
    dq: Any
    dr: Any

    def __post_init__(self):
        dE = np.asarray(self.dE)
        dG = np.asarray(self.dG)
        n, m = dE.shape[0], dG.shape[0]
        dF = _frozen(self.dF, (m, n), 'dF')
        dH = dF if self.dH is None or self.dH is self.dF else _frozen(self.dH, (m, n), 'dH')
        values = {
            'dE': _frozen(dE, (n, n), 'dE'),
            'dF': dF,
            'dH': dH,
            'dG': _frozen(dG, (m, m), 'dG'),
            'dq': _frozen(self.dq, (n,), 'dq'),
            'dr': _frozen(self.dr, (m,), 'dr'),
        }
        for name, value in values.items():
            object.__setattr__(self, name, value)

    @classmethod
    def zeros(cls, n, m, case=StructureCase.CaseIII):
        dF = np.zeros((m, n), dtype=complex)
        dH = None if case.aliases_H else np.zeros((m, n), dtype=complex)
        return cls(
            np.zeros((n, n), dtype=complex),
            dF,
            dH,
            np.zeros((m, m), dtype=complex),
            np.zeros(n, dtype=complex),
            np.zeros(m, dtype=complex),
        )

    def blocks(self):
        return {'E': self.dE, 'F': self.dF, 'H': self.dH, 'G': self.dG, 'q': self.dq, 'r': self.dr}

    def scaled(self, t):
        dH = None if self.dH is self.dF else t * self.dH
        return PerturbationSet(t * self.dE, t * self.dF, dH, t * self.dG, t * self.dq, t * self.dr)


@dataclass(frozen=True, eq=False)
class PerturbationDiagnostics:
    """What verify_perturbation measured"""

    residual_norm: float
    hermitian_deviation_E: Optional[float]
    hermitian_deviation_G: Optional[float]
    mask_violations: int
    weighted_norm: Optional[float]

    @property
    def structure_violations(self):
        return sum(
            1
            for deviation in (self.hermitian_deviation_E, self.hermitian_deviation_G)
            if deviation
        )


@dataclass(frozen=True, eq=False)
class BackwardErrorReport:
    xi: float
    case: StructureCase
    sparsity_preserved: bool
    perturbations: PerturbationSet
    perturbed_residual_norm: float
    weighted_norm_of_perturbations: float
    diagnostics: Optional[PerturbationDiagnostics] = None


def derive_pattern(system):
    """Nonzero pattern of each matrix block. Zero means both parts exactly 0.

    Usage:
        >>> derive_pattern(system).theta_E
        array([[1, 1, 0], ...], dtype=int8)
    """
    return SparsityPattern(
        (system.E != 0).astype(np.int8),
        (system.F != 0).astype(np.int8),
        (system.H != 0).astype(np.int8),
        (system.G != 0).astype(np.int8),
    )


def _reciprocal(norm):
    return EXCLUDED if norm == 0 else 1.0 / norm


def default_relative_weights(system, exclude_zero_rhs=False):
    """alpha = 1/||block||_F and beta = 1/||rhs||_2; zero-norm matrix
    blocks become EXCLUDED.

    Args:
        system (GsppSystem)
        exclude_zero_rhs (bool) - let a zero q or r become EXCLUDED
                                  instead of raising

    Raises:
        WeightError: q or r is zero and `exclude_zero_rhs` is False
    """
    norms = {name: float(np.linalg.norm(block)) for name, block in system.blocks().items()}
    for name in ('q', 'r'):
        if norms[name] == 0 and not exclude_zero_rhs:
            raise WeightError(
                f'{name} has zero norm, so its relative weight is undefined; '
                'pass exclude_zero_rhs=True to exclude its perturbation'
            )
    if system.case is StructureCase.CaseIII:
        return Weights(
            alpha1=_reciprocal(norms['E']),
            alpha2=_reciprocal(norms['F']),
            alpha3=_reciprocal(norms['H']),
            alpha4=_reciprocal(norms['G']),
            beta1=_reciprocal(norms['q']),
            beta2=_reciprocal(norms['r']),
        )
    return Weights(
        alpha1=_reciprocal(norms['E']),
        alpha2=_reciprocal(norms['F']),
        alpha3=_reciprocal(norms['G']),
        beta1=_reciprocal(norms['q']),
        beta2=_reciprocal(norms['r']),
    )


def weighted_norm(p, w, case):
    """The weighted Frobenius norm of a perturbation set.

    CaseI/CaseII leave dH out (it is dF). Excluded blocks contribute
    nothing and must be zero.

    Raises:
        WeightError: an EXCLUDED block carries a nonzero perturbation
    """
    perturbations = p.blocks()
    total = 0.0
    for block, weight in w.block_weights(case).items():
        norm = float(np.linalg.norm(perturbations[block]))
        if weight is EXCLUDED:
            if norm != 0:
                raise WeightError(f'block {block} is EXCLUDED but its perturbation is nonzero')
            continue
        total += (weight * norm) ** 2
    return math.sqrt(total)
