"""Test cases for the structured backward errors"""

import math
import unittest
from unittest.mock import patch

import numpy as np
import pytest
import scipy.linalg
from scipy import sparse

from gsppbe import structured_be
from gsppbe.config import DEFAULT_SETTINGS
from gsppbe.core import (
    EXCLUDED,
    CandidateSolution,
    GsppSystem,
    PerturbationSet,
    SparsityPattern,
    StructureCase,
    Weights,
    default_relative_weights,
    derive_pattern,
    weighted_norm,
)
from gsppbe.errors import DimensionError, InfeasibleError, RankDeficiencyError, StructureError
from gsppbe.problems import example1, example3, gen_random_sparse, random_candidate
from gsppbe.structured_be import (
    AssembledSystem,
    analyze,
    assemble,
    compute_structured_be,
    min_norm_solve,
    reconstruct_perturbations,
    reduce_real,
    verify_perturbation,
)
from gsppbe.unstructured_be import residuals

I = 1j
CASES = list(StructureCase)
DENSITIES = (0.3, 0.6, 1.0)

# optimal perturbations printed for Example 1, in units of 1e-5
EXAMPLE1_DE_UPPER = {
    (0, 0): 3.5894,
    (0, 1): -3.0713 - 2.1972 * I,
    (0, 2): -4.2943 - 2.2135 * I,
    (0, 3): 5.4466 - 3.3205 * I,
    (0, 4): -2.1295 + 1.9597 * I,
    (1, 1): 1.2093,
    (1, 2): 5.6451 - 1.0180 * I,
    (1, 3): 2.7731 + 3.7360 * I,
    (1, 4): -2.5866 + 2.5464 * I,
    (2, 3): 4.0067 + 2.8368 * I,
    (2, 4): -3.5135 + 1.8975 * I,
    (3, 4): 4.0822 - 2.4857 * I,
}
EXAMPLE1_DF = [
    [-0.5850 + 5.2796 * I, 0, 0, -8.0796 + 2.8769 * I, 0],
    [-1.5373 + 1.8646 * I, 0, 1.9608 - 4.3999 * I, 2.5302 + 7.2612 * I, 0],
    [-9.6826 - 8.4119 * I, -3.4175 + 4.2353 * I, -3.2788 + 1.0017 * I, 0, -7.6773 - 2.9473 * I],
    [-7.1701 - 5.4915 * I, -2.2259 + 7.7132 * I, 0, -4.9771 - 3.4259 * I, -0.1621 + 3.5988 * I],
]
EXAMPLE1_DG = {
    (0, 0): -1.5374 + 2.9958 * I,
    (0, 2): 0.7551 - 0.2236 * I,
    (0, 3): 2.6735 + 1.2196 * I,
    (1, 1): 0.0349 + 2.83169 * I,
    (1, 3): 0.9484 - 4.7166 * I,
    (2, 1): -3.3959 + 4.2108 * I,
    (2, 2): 0.4254 - 2.4258 * I,
    (2, 3): 7.1382 - 5.7885 * I,
    (3, 0): -1.2947 + 3.6675 * I,
    (3, 3): 3.2493 + 0.0981 * I,
}
EXAMPLE1_DQ = [2.8974 - 3.9154 * I, 3.7448 + 3.2211 * I, 4.9361 + 3.0047 * I, -1.1399 - 2.9206 * I, 2.8144 + 3.0114 * I]
EXAMPLE1_DR = [-1.7842 + 0.56641 * I, 1.5676 + 2.6335 * I, -0.8984 + 5.7852 * I, -1.9543 + 0.9252 * I]

# printed to four decimals of 1e-5
ENTRY_RTOL = 5e-3
ENTRY_ATOL = 2e-9

# The printed candidate leaves a residual of 0.2418 on the printed data,
# almost all of it in r[0], not the 0.0012 quoted with it. Every printed
# backward error and perturbation inherits the mismatch.
PRINTED_EXAMPLE1 = pytest.mark.xfail(
    strict=True,
    reason='printed data gives residual 0.2418, unstructured 8.0986e-03, '
           'sparse 2.5222e-02, dense 2.3220e-02',
)


def instance(seed, case):
    """Seeded random instance with n + m <= 11"""
    n = 1 + seed % 6
    m = 1 + (seed // 6) % 5
    density = DENSITIES[seed % 3]
    return gen_random_sparse(seed, n, m, density, case), random_candidate(seed, n, m)


def real_instance(seed, case):
    system, sol = instance(seed, case)
    H = None if case.aliases_H else system.H.real
    real = GsppSystem(system.E.real, system.F.real, H, system.G.real, system.q.real, system.r.real, case)
    return real, CandidateSolution(sol.u_hat.real, sol.p_hat.real)


def with_zero_g(system):
    return GsppSystem(
        system.E, system.F, system.H, np.zeros_like(system.G), system.q, system.r, system.case
    )


def feasibility_scale(system, sol):
    return system.matrix_norm() * np.linalg.norm(sol.x) + np.linalg.norm(system.rhs())


class TestExample1(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        fixture = example1()
        cls.system, cls.sol = fixture.system, fixture.solution
        cls.result = analyze(cls.system, cls.sol)

    def test_backward_errors(self):
        assert self.result.residual_norm == pytest.approx(0.24181, rel=1e-3)
        assert self.result.unstructured == pytest.approx(8.0986e-03, rel=1e-3)
        assert self.result.sparse.xi == pytest.approx(2.5222e-02, rel=1e-3)
        assert self.result.dense.xi == pytest.approx(2.3220e-02, rel=1e-3)
        assert self.result.dense.xi <= self.result.sparse.xi

    @PRINTED_EXAMPLE1
    def test_printed_backward_errors(self):
        assert self.result.residual_norm == pytest.approx(0.0012, abs=5e-5)
        assert self.result.unstructured == pytest.approx(3.9295e-05, rel=1e-3)
        assert self.result.sparse.xi == pytest.approx(3.7327e-04, rel=1e-3)
        assert self.result.dense.xi == pytest.approx(3.2520e-04, rel=1e-3)

    @PRINTED_EXAMPLE1
    def test_printed_optimal_perturbations(self):
        p = self.result.sparse.perturbations
        for (i, j), value in EXAMPLE1_DE_UPPER.items():
            np.testing.assert_allclose(p.dE[i, j], 1e-5 * value, rtol=ENTRY_RTOL, atol=ENTRY_ATOL)
        np.testing.assert_allclose(p.dF, 1e-5 * np.array(EXAMPLE1_DF), rtol=ENTRY_RTOL, atol=ENTRY_ATOL)
        for (i, j), value in EXAMPLE1_DG.items():
            np.testing.assert_allclose(p.dG[i, j], 1e-5 * value, rtol=ENTRY_RTOL, atol=ENTRY_ATOL)
        np.testing.assert_allclose(p.dq, 1e-5 * np.array(EXAMPLE1_DQ), rtol=ENTRY_RTOL, atol=ENTRY_ATOL)
        np.testing.assert_allclose(p.dr, 1e-5 * np.array(EXAMPLE1_DR), rtol=ENTRY_RTOL, atol=ENTRY_ATOL)

    def test_structure_is_exact(self):
        p = self.result.sparse.perturbations
        assert np.array_equal(p.dE, p.dE.conj().T)
        pattern = derive_pattern(self.system)
        for block in ('E', 'F', 'G'):
            assert not np.any(p.blocks()[block][pattern.mask(block) == 0])
        diagnostics = self.result.sparse.diagnostics
        assert diagnostics.mask_violations == 0
        assert diagnostics.structure_violations == 0
        assert diagnostics.residual_norm <= 1e-12

    def test_weighted_norm_is_xi(self):
        for report in (self.result.sparse, self.result.dense):
            assert report.weighted_norm_of_perturbations == pytest.approx(report.xi, rel=1e-10)

    def test_layout_size(self):
        w = default_relative_weights(self.system)
        assembled = assemble(self.system, self.sol, SparsityPattern.ones(5, 4), w)
        assert assembled.full_shape == (18, 115)
        assert assembled.A.shape == (18, 115)
        sparse_assembled = assemble(self.system, self.sol, derive_pattern(self.system), w)
        assert sparse_assembled.full_shape == (18, 115)
        assert sparse_assembled.A.shape[1] < 115
        expanded = sparse_assembled.expanded()
        assert expanded.shape == (18, 115)
        inactive = np.setdiff1d(np.arange(115), sparse_assembled.layout.active_columns)
        assert abs(expanded[:, inactive]).sum() == 0


@pytest.mark.parametrize("case,columns", [
    (StructureCase.CaseI, 25 + 40 + 32),
    (StructureCase.CaseII, 2 * (25 + 20) + 16),
    (StructureCase.CaseIII, 25 + 80 + 16),
])
def test_generator_counts(case, columns):
    system = gen_random_sparse(1, 5, 4, 1.0, case)
    sol = random_candidate(1, 5, 4)
    assembled = assemble(system, sol, SparsityPattern.ones(5, 4), default_relative_weights(system))
    assert assembled.full_shape == (18, columns + 18)
    segment = assembled.layout.segment('q-real')
    assert segment.length == 5


@pytest.mark.parametrize("case", CASES)
def test_optimality(case):
    for seed in range(50):
        system, sol = instance(seed, case)
        w = default_relative_weights(system)
        scale = feasibility_scale(system, sol)
        xis = {}
        for preserve in (True, False):
            report = compute_structured_be(system, sol, w, preserve_sparsity=preserve)
            xis[preserve] = report.xi
            assert report.perturbed_residual_norm <= 1e-10 * scale

            pattern = derive_pattern(system) if preserve else SparsityPattern.ones(system.n, system.m)
            assembled = assemble(system, sol, pattern, w)
            A = assembled.A.toarray()
            z = np.linalg.pinv(A) @ assembled.rhs
            assert report.xi == pytest.approx(np.linalg.norm(z), rel=1e-10, abs=1e-300)

            null = scipy.linalg.null_space(A)
            rng = np.random.default_rng(seed)
            for _ in range(20):
                shifted = z + null @ rng.standard_normal(null.shape[1])
                assert np.linalg.norm(shifted) >= report.xi * (1 - 1e-12)

            p = report.perturbations
            if case.hermitian_E:
                assert np.array_equal(p.dE, p.dE.conj().T)
            if case.hermitian_G:
                assert np.array_equal(p.dG, p.dG.conj().T)
            if case.aliases_H:
                assert p.dH is p.dF
            if preserve:
                assert report.diagnostics.mask_violations == 0
        assert xis[True] >= xis[False] * (1 - 1e-12)


@pytest.mark.parametrize("case", CASES)
def test_real_reduction(case):
    for seed in range(25):
        system, sol = real_instance(seed, case)
        for preserve in (True, False):
            reduced = reduce_real(system, sol, preserve_sparsity=preserve)
            full = compute_structured_be(system, sol, preserve_sparsity=preserve)
            assert reduced.xi == pytest.approx(full.xi, rel=1e-12, abs=1e-300)
            p = reduced.perturbations
            for block in p.blocks().values():
                assert not np.any(block.imag)


def test_reduce_real_rejects_complex_data():
    system, sol = instance(3, StructureCase.CaseI)
    with pytest.raises(StructureError):
        reduce_real(system, sol)


def test_excluded_limit():
    for seed in range(10):
        system = with_zero_g(gen_random_sparse(seed, 3, 2, 1.0, StructureCase.CaseI))
        sol = random_candidate(seed, 3, 2)
        w = default_relative_weights(system)
        assert w.alpha3 is EXCLUDED
        heavy = Weights(w.alpha1, w.alpha2, 1e12, w.beta1, w.beta2)
        excluded = compute_structured_be(system, sol, w, preserve_sparsity=False)
        limit = compute_structured_be(system, sol, heavy, preserve_sparsity=False)
        assert excluded.xi == pytest.approx(limit.xi, rel=1e-6)
        assert not np.any(excluded.perturbations.dG)


def test_case_i_optimum_bounds_case_iii():
    for seed in range(10):
        system = with_zero_g(gen_random_sparse(seed, 3, 2, 1.0, StructureCase.CaseI))
        sol = random_candidate(seed, 3, 2)
        as_case_iii = GsppSystem(
            system.E, system.F, system.F, system.G, system.q, system.r, StructureCase.CaseIII
        )
        w = default_relative_weights(system)
        half = w.alpha2 / math.sqrt(2)
        w3 = Weights(w.alpha1, half, half, w.beta1, w.beta2, alpha4=EXCLUDED)
        xi_1 = compute_structured_be(system, sol, w, preserve_sparsity=False).xi
        xi_3 = compute_structured_be(as_case_iii, sol, w3, preserve_sparsity=False).xi
        assert xi_3 <= xi_1 * (1 + 1e-12)


@pytest.mark.parametrize("case", CASES)
def test_exact_solution_has_zero_error(case):
    rng = np.random.default_rng(5)
    n, m = 3, 2

    def ints(*shape):
        return rng.integers(-3, 4, shape) + 1j * rng.integers(-3, 4, shape)

    E, G = ints(n, n), ints(m, m)
    if case.hermitian_E:
        E = E + E.conj().T
    if case.hermitian_G:
        G = G + G.conj().T
    F = ints(m, n)
    H = None if case.aliases_H else ints(m, n)
    u, p = ints(n), ints(m)
    q = E @ u + F.conj().T @ p
    r = (F if H is None else H) @ u + G @ p
    system = GsppSystem(E, F, H, G, q, r, case)
    result = analyze(system, CandidateSolution(u, p))
    assert result.unstructured == 0.0
    for report in result.reports.values():
        assert report.xi == 0.0
        assert all(not np.any(block) for block in report.perturbations.blocks().values())


def test_fully_excluded_configuration_is_infeasible():
    system, sol = instance(4, StructureCase.CaseI)
    w = Weights(EXCLUDED, EXCLUDED, EXCLUDED, EXCLUDED, EXCLUDED)
    with pytest.raises(InfeasibleError):
        compute_structured_be(system, sol, w)


def test_excluded_rhs_keeps_rhs_unperturbed():
    system, sol = instance(10, StructureCase.CaseII)
    w = default_relative_weights(system)
    w = Weights(w.alpha1, w.alpha2, w.alpha3, EXCLUDED, EXCLUDED)
    report = compute_structured_be(system, sol, w, preserve_sparsity=False)
    assert not np.any(report.perturbations.dq)
    assert not np.any(report.perturbations.dr)
    assert report.perturbed_residual_norm <= 1e-10 * feasibility_scale(system, sol)


class TestMinNormSolve(unittest.TestCase):
    def system(self, A, b):
        A = sparse.csr_matrix(np.asarray(A, dtype=float))
        return AssembledSystem(A=A, rhs=np.asarray(b, dtype=float), layout=None,
                               row_index=np.arange(A.shape[0]), full_rows=A.shape[0])

    def test_small_example(self):
        z = min_norm_solve(self.system([[1.0, 1.0]], [2.0]))
        np.testing.assert_allclose(z, [1.0, 1.0])

    def test_unique_minimal_completion(self):
        z = min_norm_solve(self.system([[1.0, 0.0]], [2.0]))
        np.testing.assert_allclose(z, [2.0, 0.0], atol=1e-15)

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((6, 20))
        b = rng.standard_normal(6)
        expected = A.T @ np.linalg.solve(A @ A.T, b)
        np.testing.assert_allclose(min_norm_solve(self.system(A, b)), expected, rtol=1e-10, atol=1e-12)

    def test_rank_deficiency(self):
        with pytest.raises(RankDeficiencyError):
            min_norm_solve(self.system([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0]))
        with pytest.raises(RankDeficiencyError):
            min_norm_solve(self.system([[1.0], [2.0]], [1.0, 2.0]))

    def test_zero_row(self):
        for dense_limit in (4_000_000, 0):
            with pytest.raises(RankDeficiencyError):
                min_norm_solve(self.system([[1.0, 2.0, 0.0], [0.0, 0.0, 0.0]], [1.0, 0.0]), dense_limit=dense_limit)

    def test_nan_factor_is_rejected(self):
        with pytest.raises(RankDeficiencyError):
            min_norm_solve(self.system([[1.0, np.nan], [0.0, 1.0]], [1.0, 1.0]))

    def test_blocked_path_matches_pseudo_inverse(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 20))
        b = rng.standard_normal(5)
        expected = np.linalg.pinv(A) @ b
        z = min_norm_solve(self.system(A, b), dense_limit=0, chunk_rows=3)
        np.testing.assert_allclose(z, expected, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(min_norm_solve(self.system(A, b)), expected, rtol=1e-10, atol=1e-12)

    def test_badly_scaled_rows(self):
        A = np.array([[1e-8, 2e-8, 0.0], [0.0, 1e6, 3e6]])
        b = np.array([1e-8, 1e6])
        z = min_norm_solve(self.system(A, b))
        np.testing.assert_allclose(A @ z, b, rtol=1e-12)


class TestReconstruction(unittest.TestCase):
    def test_scatter_leaves_masked_coordinates_zero(self):
        fixture = example1()
        w = default_relative_weights(fixture.system)
        assembled = assemble(fixture.system, fixture.solution, derive_pattern(fixture.system), w)
        z = assembled.layout.scatter(min_norm_solve(assembled))
        inactive = np.setdiff1d(np.arange(z.size), assembled.layout.active_columns)
        assert not np.any(z[inactive])
        with pytest.raises(DimensionError):
            assembled.layout.scatter(np.zeros(3))

    def test_wrong_length(self):
        fixture = example1()
        w = default_relative_weights(fixture.system)
        assembled = assemble(fixture.system, fixture.solution, SparsityPattern.ones(5, 4), w)
        with pytest.raises(DimensionError):
            reconstruct_perturbations(np.zeros(10), assembled.layout)
        with pytest.raises(DimensionError):
            reconstruct_perturbations(np.zeros(115), assembled.layout, case=StructureCase.CaseII)

    def test_weighted_norm_bookkeeping(self):
        system, sol = instance(17, StructureCase.CaseIII)
        w = default_relative_weights(system)
        assembled = assemble(system, sol, SparsityPattern.ones(system.n, system.m), w)
        z = assembled.layout.scatter(min_norm_solve(assembled))
        p = reconstruct_perturbations(z, assembled.layout, w=w, case=StructureCase.CaseIII)
        assert weighted_norm(p, w, StructureCase.CaseIII) == pytest.approx(np.linalg.norm(z), rel=1e-10)

    def test_zero_vector_gives_zero_perturbations(self):
        fixture = example1()
        w = default_relative_weights(fixture.system)
        assembled = assemble(fixture.system, fixture.solution, SparsityPattern.ones(5, 4), w)
        p = reconstruct_perturbations(np.zeros(115), assembled.layout)
        assert all(not np.any(block) for block in p.blocks().values())


class TestBookkeeping(unittest.TestCase):
    def test_default_tolerance_is_quiet(self):
        system, sol = instance(13, StructureCase.CaseII)
        with patch('gsppbe.structured_be.logger') as logger:
            report = compute_structured_be(system, sol)
        logger.warning.assert_not_called()
        assert structured_be._check_bookkeeping(system, sol, report.xi, report.diagnostics, 1e-10)

    def test_tight_tolerance_warns(self):
        system, sol = instance(13, StructureCase.CaseII)
        tight = DEFAULT_SETTINGS._replace(verify_rtol=1e-300)
        with patch('gsppbe.structured_be.logger') as logger:
            compute_structured_be(system, sol, settings=tight)
        assert logger.warning.called

    def test_wrong_xi_is_flagged(self):
        system, sol = instance(13, StructureCase.CaseI)
        report = compute_structured_be(system, sol)
        with patch('gsppbe.structured_be.logger') as logger:
            consistent = structured_be._check_bookkeeping(
                system, sol, 2 * report.xi, report.diagnostics, 1e-10
            )
        assert not consistent
        logger.warning.assert_called_once()


class TestVerifyPerturbation(unittest.TestCase):
    def test_zero_perturbations_leave_the_residual(self):
        fixture = example3()
        system, sol = fixture.system, fixture.solution
        p = PerturbationSet.zeros(system.n, system.m, system.case)
        diagnostics = verify_perturbation(system, sol, p, derive_pattern(system))
        assert diagnostics.residual_norm == pytest.approx(residuals(system, sol).norm(), rel=1e-12)
        assert diagnostics.mask_violations == 0
        assert diagnostics.weighted_norm == 0.0
        assert diagnostics.hermitian_deviation_E is None

    def test_broken_hermitian_symmetry(self):
        fixture = example1()
        system, sol = fixture.system, fixture.solution
        report = compute_structured_be(system, sol)
        dE = np.array(report.perturbations.dE)
        dE[0, 1] += 1e-3
        p = report.perturbations
        broken = PerturbationSet(dE, p.dF, None, p.dG, p.dq, p.dr)
        diagnostics = verify_perturbation(system, sol, broken, derive_pattern(system))
        assert diagnostics.hermitian_deviation_E > 0
        assert diagnostics.structure_violations == 1

    def test_mask_violations(self):
        fixture = example1()
        system, sol = fixture.system, fixture.solution
        p = PerturbationSet.zeros(system.n, system.m, system.case)
        dG = np.ones((4, 4))
        dense = PerturbationSet(p.dE, p.dF, None, dG, p.dq, p.dr)
        diagnostics = verify_perturbation(system, sol, dense, derive_pattern(system))
        assert diagnostics.mask_violations == int((system.G == 0).sum())


class TestAnalyze(unittest.TestCase):
    def test_bad_sparsity_mode(self):
        fixture = example1()
        with pytest.raises(ValueError):
            analyze(fixture.system, fixture.solution, sparsity='sometimes')

    def test_single_mode(self):
        fixture = example1()
        result = analyze(fixture.system, fixture.solution, sparsity='ignore')
        assert result.sparse is None
        assert result.dense.xi == pytest.approx(2.3220e-02, rel=1e-3)

    def test_real_data_uses_reduction(self):
        system, sol = real_instance(2, StructureCase.CaseIII)
        with patch('gsppbe.structured_be.reduce_real', wraps=structured_be.reduce_real) as reduce:
            result = analyze(system, sol)
        assert reduce.call_count == 2
        assert result.relative_residual == pytest.approx(
            residuals(system, sol).norm() / np.linalg.norm(system.rhs())
        )
