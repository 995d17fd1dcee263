"""
    problems.py
    ~~~~~~~~~~~

    Embedded test problems and parametric generators.

    Random generators draw from ``numpy.random.Generator(Philox(seed))``:
    a counter-based bit generator, so a seed fixes the whole system.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import logging
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

import numpy as np
from scipy import sparse

from gsppbe.core import CandidateSolution, GsppSystem, StructureCase

logger = logging.getLogger('gsppbe.problems')

FIXTURES = ('example1', 'example3', 'example4', 'random', 'random-study')

I = 1j

# Example 1: complex system of case i, n = 5, m = 4. The candidate leaves
# residual 0.2418 on this data, almost all of it in r[0].
EXAMPLE1_E = [
    [-0.7073, -0.2258 * I, -0.3326 + 0.4370 * I, -0.3111 - 0.1089 * I, -0.2558 * I],
    [0.2258 * I, 1.6606, 1.0022, -0.0749, 0.2357 * I],
    [-0.3326 - 0.4370 * I, 1.0022, 0, -1.5009, -0.1383 - 0.0928 * I],
    [-0.3111 + 0.1089 * I, -0.0749, -1.5009, 0, -0.1 * I],
    [0.2558 * I, -0.2357 * I, -0.1383 + 0.0928 * I, 0.1 * I, 0],
]
EXAMPLE1_F = [
    [-0.0753 + 1.3412 * I, 0, 0, -1.3057, 0],
    [-0.1974, 0, 2.9371, 0.3806 * I, 0],
    [0.2232 + 1.4354 * I, 0.7996 * I, 0.3985, 0, 1.6102],
    [0.3862, 0.0097, 0, 1.6286 * I, 0.1291 * I],
]
EXAMPLE1_G = [
    [1.5246 - 0.1337 * I, 0, -0.6924, -0.0408 * I],
    [0, -0.9025, 0, 0.0704],
    [0, -0.6885 + 0.6028 * I, 0.7823 * I, 1.2309],
    [0.2146 * I, 0, 0, -0.2746],
]
EXAMPLE1_Q = [
    -0.8098 - 0.3969 * I,
    -1.3853 + 0.5947 * I,
    0.0909 + 0.2202 * I,
    -0.2140 - 0.7165 * I,
    0.1509 + 0.0117 * I,
]
EXAMPLE1_R = [
    -2.3554 - 0.9550 * I,
    0.6201 - 0.7783 * I,
    0.3106 + 1.5288 * I,
    -0.0908 - 1.8683 * I,
]
EXAMPLE1_U = [
    0.9249 + 1.6011 * I,
    -0.5210 + 0.2407 * I,
    0.0189 + 0.2151 * I,
    -1.5819 + 0.1480 * I,
    0.5443 + 1.2113 * I,
]
EXAMPLE1_P = [
    -1.2670 - 1.2768 * I,
    -0.7997 + 0.4628 * I,
    0.4206 - 0.0082 * I,
    1.1641 - 1.0531 * I,
]

# Example 3: badly scaled complex system of case ii, n = 4, m = 3
EXAMPLE3_E = [
    [0.01 * I, 1e7 * (1 + I), 30 * (-1 + I), 0],
    [100 * (1 + I), 0, 0, 1e5 * (-1 + I)],
    [50 * (1 + I), 100 * (1 + I), 0, 0],
    [0, 200 * (1 - I), 1e5 * (1 + I), 0.01 * (1 + I)],
]
EXAMPLE3_F = [
    [1e-5 * (1 + I), 1e7 * (1 + I), 0, 0],
    [1e8 * (1 - I), 1e-5 * (1 + I), -1e-6 * (1 + I), 0],
    [0, 1e5 * (1 + I), 1e-5 * (1 - I), 1e6 * (1 + I)],
]
EXAMPLE3_G = [
    [1e5, 0, 100 + 0.01 * I],
    [0, 1e-6, 0],
    [100 - 0.01 * I, 0, -1],
]
EXAMPLE3_Q = [1e4 * (1 + I), 10 * (1 + I), 0, 1e-6 * (1 + I)]
EXAMPLE3_R = [0.01 * (1 - I), 0, 0]
EXAMPLE3_U = [-0.0995 - 0.9904 * I, 0.0005 + 0.0003 * I, -99.0353 + 9.9509 * I, 0]
EXAMPLE3_P = [-0.01 - 0.099 * I, 0, 0.9951 + 9.9035 * I]


class Fixture(NamedTuple):
    system: GsppSystem
    solution: Optional[CandidateSolution]
    exact_solution: Optional[Any]


@dataclass(frozen=True)
class FixtureId:
    """Names a fixture and its parameters.

    Args:
        name (str) - one of FIXTURES
        t (int) - grid size of example4, >= 2
        k (int) - size parameter of random-study (n = 3k, m = 2k)
        seed, n, m, density, case - random generator parameters
    """

    name: str
    t: Optional[int] = None
    k: Optional[int] = None
    seed: int = 0
    n: Optional[int] = None
    m: Optional[int] = None
    density: float = 1.0
    case: StructureCase = StructureCase.CaseI

    def __post_init__(self):
        if self.name not in FIXTURES:
            raise ValueError(f"Unknown fixture '{self.name}', expected one of {FIXTURES}")
        if self.name == 'example4' and (self.t is None or self.t < 2):
            raise ValueError('example4 needs t >= 2')
        if self.name == 'random-study' and (self.k is None or self.k < 1):
            raise ValueError('random-study needs k >= 1')
        if self.name == 'random' and (not self.n or not self.m):
            raise ValueError('random needs n >= 1 and m >= 1')
        if not 0 < self.density <= 1:
            raise ValueError(f'density must be in (0, 1], got {self.density}')


def example1():
    system = GsppSystem(
        EXAMPLE1_E, EXAMPLE1_F, None, EXAMPLE1_G, EXAMPLE1_Q, EXAMPLE1_R, StructureCase.CaseI
    )
    return Fixture(system, CandidateSolution(EXAMPLE1_U, EXAMPLE1_P), None)


def example3():
    system = GsppSystem(
        EXAMPLE3_E, EXAMPLE3_F, None, EXAMPLE3_G, EXAMPLE3_Q, EXAMPLE3_R, StructureCase.CaseII
    )
    return Fixture(system, CandidateSolution(EXAMPLE3_U, EXAMPLE3_P), None)


def _tridiag(t, lower, diag, upper):
    return sparse.diags(
        [np.full(t - 1, lower), np.full(t, diag), np.full(t - 1, upper)], offsets=[-1, 0, 1], format='csr'
    )


def stokes_factors(t):
    """(J, X, Y) of the Kronecker construction as sparse matrices"""
    J = _tridiag(t, -1.0, 2.0, -1.0) / (t + 1) ** 2
    X = _tridiag(t, 0.0, 1.0, -1.0) / (t + 1)
    Y = sparse.diags(np.arange(t) * t + 1.0, format='csr')
    return J, X, Y


def gen_stokes_like(t):
    """Real case iii system of size 3t^2 built from Kronecker products of
    small tridiagonal factors; G = 0 and f = B 1.

    Usage:
        >>> gen_stokes_like(2).E.shape
        (8, 8)
    """
    if t < 2:
        raise ValueError('t must be at least 2')
    eye = sparse.identity(t, format='csr')
    J, X, Y = stokes_factors(t)

    laplace = sparse.kron(eye, J) + sparse.kron(J, eye)
    E = sparse.block_diag([laplace, laplace]).toarray()
    F = sparse.hstack([sparse.kron(eye, X), sparse.kron(X, eye)]).toarray()
    H = sparse.hstack([sparse.kron(Y, X), sparse.kron(X, Y)]).toarray()
    G = np.zeros((t * t, t * t))

    n = E.shape[0]
    f = np.block([[E, F.T], [H, G]]).astype(complex) @ np.ones(n + G.shape[0], dtype=complex)
    return GsppSystem(E, F, H, G, f[:n], f[n:], StructureCase.CaseIII)


def example4(t):
    system = gen_stokes_like(t)
    return Fixture(system, None, np.ones(system.n + system.m))


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def _sprandn(rng, rows, cols, density):
    """Normal entries on a random support of about density * rows * cols"""
    values = rng.standard_normal((rows, cols))
    if density >= 1:
        return values
    return np.where(rng.random((rows, cols)) < density, values, 0.0)


def _complex_sprandn(rng, rows, cols, density):
    support = rng.random((rows, cols)) < density if density < 1 else np.ones((rows, cols), dtype=bool)
    values = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return np.where(support, values, 0)


def _hermitian(rng, m, density):
    S = _complex_sprandn(rng, m, m, density)
    return S + S.conj().T


def gen_random_sparse(seed, n, m, density=1.0, case=StructureCase.CaseI):
    """Seeded random complex system of `case`.

    Hermitian blocks are S + S* for a random sparse S, so their pattern
    is symmetric; other blocks are sparse random with the given density.
    q and r are dense.
    """
    if not 0 < density <= 1:
        raise ValueError(f'density must be in (0, 1], got {density}')
    case = StructureCase(case)
    rng = _rng(seed)
    E = _hermitian(rng, n, density) if case.hermitian_E else _complex_sprandn(rng, n, n, density)
    F = _complex_sprandn(rng, m, n, density)
    G = _hermitian(rng, m, density) if case.hermitian_G else _complex_sprandn(rng, m, m, density)
    H = None if case.aliases_H else _complex_sprandn(rng, m, n, density)
    q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    r = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return GsppSystem(E, F, H, G, q, r, case)


def random_candidate(seed, n, m):
    """A seeded dense complex candidate solution"""
    rng = _rng(seed + 1)
    return CandidateSolution(
        rng.standard_normal(n) + 1j * rng.standard_normal(n),
        rng.standard_normal(m) + 1j * rng.standard_normal(m),
    )


def gmres_study_system(k, seed=0):
    """Complex case i system with n = 3k, m = 2k: E has real and imaginary
    parts E1 + E1^T and E2 + E2^T (support density 0.4), F and G are
    sparse complex (density 0.5), q and r dense.
    """
    rng = _rng(seed)
    n, m = 3 * k, 2 * k
    E1 = _sprandn(rng, n, n, 0.4)
    E2 = _sprandn(rng, n, n, 0.4)
    # imaginary part must be skew for E to be Hermitian
    E = (E1 + E1.T) + 1j * (E2 - E2.T)
    F = _sprandn(rng, m, n, 0.5) + 1j * _sprandn(rng, m, n, 0.5)
    G = _sprandn(rng, m, m, 0.5) + 1j * _sprandn(rng, m, m, 0.5)
    q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    r = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return GsppSystem(E, F, None, G, q, r, StructureCase.CaseI)


def load_fixture(fixture_id):
    """Returns (system, candidate solution or None, exact solution or None)

    Raises:
        ValueError: unknown fixture
    """
    if isinstance(fixture_id, str):
        fixture_id = FixtureId(fixture_id)
    name = fixture_id.name
    logger.debug('loading fixture %s', fixture_id)
    if name == 'example1':
        return example1()
    if name == 'example3':
        return example3()
    if name == 'example4':
        return example4(fixture_id.t)
    if name == 'random-study':
        return Fixture(gmres_study_system(fixture_id.k, fixture_id.seed), None, None)
    system = gen_random_sparse(
        fixture_id.seed, fixture_id.n, fixture_id.m, fixture_id.density, fixture_id.case
    )
    return Fixture(system, random_candidate(fixture_id.seed, fixture_id.n, fixture_id.m), None)
