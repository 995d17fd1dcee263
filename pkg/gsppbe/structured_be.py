"""
    structured_be.py
    ~~~~~~~~~~~~~~~~

    Structured backward errors. The feasibility equations
    (B + dB) x = f + df are split into real and imaginary parts and
    written as one real underdetermined system A z = rhs in the weighted
    generator coordinates z of the admissible perturbations; the
    structured backward error is the 2-norm of its minimum-norm solution.

    Row blocks of A are [Re Q; Im Q; Re R; Im R]. Column segments follow
    the block order E, F, (H), G, q, r with a real and an imaginary part
    each. Hermitian blocks use symmetric/skew generators for their
    real/imaginary parts, the rest use full vec. Masked-out generator
    coordinates and EXCLUDED segments carry no column.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse

from gsppbe.config import DEFAULT_SETTINGS
from gsppbe.core import (
    EXCLUDED,
    BackwardErrorReport,
    PerturbationDiagnostics,
    PerturbationSet,
    SparsityPattern,
    StructureCase,
    default_relative_weights,
    derive_pattern,
    weighted_norm,
)
from gsppbe.errors import (
    DimensionError,
    InfeasibleError,
    RankDeficiencyError,
    StructureError,
    WeightError,
)
from gsppbe.unstructured_be import residuals, rigal_gaches
from gsppbe.utils import chunks
from gsppbe.vecops import (
    GeneratorKind,
    SelectorBundle,
    build_mask_diagonals,
    build_scalings,
    generator_length,
    mask_generator,
    unvec,
    unvec_skew,
    unvec_sym,
)

logger = logging.getLogger('gsppbe.structured')

ROW_BLOCKS = ('Qr', 'Qi', 'Rr', 'Ri')
REAL_ROW_BLOCKS = ('Qr', 'Rr')


@dataclass(frozen=True, eq=False)
class Segment:
    """One column segment of the layout.

    `kind` is None for the right-hand-side segments. `active` holds the
    in-segment generator positions that carry a column.
    """

    name: str
    block: str
    part: str
    kind: Optional[GeneratorKind]
    shape: Tuple[int, ...]
    weight: Any
    offset: int
    length: int
    active: Any
    deleted: bool

    @property
    def stop(self):
        return self.offset + (0 if self.deleted else self.length)


@dataclass(frozen=True, eq=False)
class ColumnLayout:
    segments: Tuple[Segment, ...]
    case: StructureCase
    n: int
    m: int
    real_only: bool = False

    @property
    def total_length(self):
        """Generator length of every kept segment, inactive positions included"""
        return sum(s.length for s in self.segments if not s.deleted)

    @property
    def active_columns(self):
        """Positions in the full generator vector that carry a column of A"""
        kept = [s.offset + s.active for s in self.segments if not s.deleted]
        return np.concatenate(kept) if kept else np.zeros(0, dtype=int)

    def segment(self, name):
        for s in self.segments:
            if s.name == name:
                return s
        raise KeyError(name)

    def scatter(self, z_active):
        """Spreads a solution over active columns into the full vector"""
        z_active = np.asarray(z_active, dtype=float)
        columns = self.active_columns
        if z_active.shape != columns.shape:
            raise DimensionError(f'expected {columns.size} active entries, got {z_active.size}')
        z = np.zeros(self.total_length)
        z[columns] = z_active
        return z


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """A z = rhs over the active columns.

    Rows that are structurally zero with a zero right-hand side are
    dropped; `row_index` maps kept rows back to [Re Q; Im Q; Re R; Im R].
    """

    A: Any
    rhs: Any
    layout: ColumnLayout
    row_index: Any
    full_rows: int

    @property
    def full_shape(self):
        return (self.full_rows, self.layout.total_length)

    def expanded(self):
        """A with every row and every generator column, masked ones zero"""
        coo = self.A.tocoo()
        return sparse.csr_matrix(
            (coo.data, (self.row_index[coo.row], self.layout.active_columns[coo.col])),
            shape=self.full_shape,
        )

    def expanded_rhs(self):
        rhs = np.zeros(self.full_rows)
        rhs[self.row_index] = self.rhs
        return rhs


def _left(v, k):
    """v^T kron I_k, so that M v = _left(v, k) @ vec(M)"""
    return sparse.kron(
        sparse.csr_matrix(np.asarray(v, dtype=float).reshape(1, -1)),
        sparse.identity(k, format='csr'),
        format='csr',
    )


def _right(v, k):
    """I_k kron v^T, so that M^T v = _right(v, k) @ vec(M)"""
    return sparse.kron(
        sparse.identity(k, format='csr'),
        sparse.csr_matrix(np.asarray(v, dtype=float).reshape(1, -1)),
        format='csr',
    )


@dataclass
class _Planned:
    name: str
    block: str
    part: str
    kind: Optional[GeneratorKind]
    shape: Tuple[int, ...]
    rows: Dict[str, Any] = field(default_factory=dict)


def _plan(system, sol):
    """Column segments and their coefficient blocks, acting on vec
    coordinates of the real or imaginary part of each perturbation
    """
    n, m, case = system.n, system.m, system.case
    ur, ui = sol.u_hat.real, sol.u_hat.imag
    pr, pi = sol.p_hat.real, sol.p_hat.imag
    L, Rt = _left, _right

    plan = []
    if case.hermitian_E:
        plan.append(_Planned('E-sym', 'E', 're', GeneratorKind.SymLower, (n, n), {'Qr': L(ur, n), 'Qi': L(ui, n)}))
        plan.append(_Planned('E-skew', 'E', 'im', GeneratorKind.SkewStrictLower, (n, n), {'Qr': -L(ui, n), 'Qi': L(ur, n)}))
    else:
        plan.append(_Planned('E-real', 'E', 're', GeneratorKind.Full, (n, n), {'Qr': L(ur, n), 'Qi': L(ui, n)}))
        plan.append(_Planned('E-imag', 'E', 'im', GeneratorKind.Full, (n, n), {'Qr': -L(ui, n), 'Qi': L(ur, n)}))

    # F enters the first block row transposed: (dF)* p
    f_re = {'Qr': Rt(pr, n), 'Qi': Rt(pi, n)}
    f_im = {'Qr': Rt(pi, n), 'Qi': -Rt(pr, n)}
    if case.aliases_H:
        f_re.update({'Rr': L(ur, m), 'Ri': L(ui, m)})
        f_im.update({'Rr': -L(ui, m), 'Ri': L(ur, m)})
    plan.append(_Planned('F-real', 'F', 're', GeneratorKind.Full, (m, n), f_re))
    plan.append(_Planned('F-imag', 'F', 'im', GeneratorKind.Full, (m, n), f_im))

    if not case.aliases_H:
        plan.append(_Planned('H-real', 'H', 're', GeneratorKind.Full, (m, n), {'Rr': L(ur, m), 'Ri': L(ui, m)}))
        plan.append(_Planned('H-imag', 'H', 'im', GeneratorKind.Full, (m, n), {'Rr': -L(ui, m), 'Ri': L(ur, m)}))

    g_re = {'Rr': L(pr, m), 'Ri': L(pi, m)}
    g_im = {'Rr': -L(pi, m), 'Ri': L(pr, m)}
    if case.hermitian_G:
        plan.append(_Planned('G-sym', 'G', 're', GeneratorKind.SymLower, (m, m), g_re))
        plan.append(_Planned('G-skew', 'G', 'im', GeneratorKind.SkewStrictLower, (m, m), g_im))
    else:
        plan.append(_Planned('G-real', 'G', 're', GeneratorKind.Full, (m, m), g_re))
        plan.append(_Planned('G-imag', 'G', 'im', GeneratorKind.Full, (m, m), g_im))

    eye_n, eye_m = sparse.identity(n, format='csr'), sparse.identity(m, format='csr')
    plan.append(_Planned('q-real', 'q', 're', None, (n,), {'Qr': -eye_n}))
    plan.append(_Planned('q-imag', 'q', 'im', None, (n,), {'Qi': -eye_n}))
    plan.append(_Planned('r-real', 'r', 're', None, (m,), {'Rr': -eye_m}))
    plan.append(_Planned('r-imag', 'r', 'im', None, (m,), {'Ri': -eye_m}))
    return plan


def _generator_map(kind, theta, cache):
    """Sparse map from scaled generator coordinates to vec coordinates"""
    if kind is GeneratorKind.Full:
        return build_mask_diagonals(theta, kind)
    key = id(theta)
    if key not in cache:
        cache[key] = SelectorBundle.build(theta)
    bundle = cache[key]
    return bundle.sym_map if kind is GeneratorKind.SymLower else bundle.skew_map


def assemble(system, sol, pattern, w, case=None, real_only=False):
    """Builds the realified constraint system for `system` at `sol`.

    Args:
        pattern (SparsityPattern) - masks; all-ones for no sparsity
        w (Weights)
        case (StructureCase) - defaults to ``system.case``
        real_only (bool) - keep only real parts and real rows (needs real
                           data; see reduce_real)

    Raises:
        DimensionError: sizes of system, solution and pattern disagree
        InfeasibleError: a residual row has no admissible column left
    """
    case = case or system.case
    if case is not system.case:
        raise StructureError(f'system is {system.case.name}, not {case.name}')
    sol.check(system)
    n, m = system.n, system.m
    if pattern.theta_E.shape != (n, n) or pattern.theta_G.shape != (m, m):
        raise DimensionError('sparsity pattern does not match the system')
    weights = w.block_weights(case)

    row_names = REAL_ROW_BLOCKS if real_only else ROW_BLOCKS
    row_sizes = {'Qr': n, 'Qi': n, 'Rr': m, 'Ri': m}

    segments, columns = [], []
    offset = 0
    cache = {}
    for planned in _plan(system, sol):
        if real_only and planned.part == 'im':
            continue
        weight = weights[planned.block]
        if planned.kind is None:
            length = planned.shape[0]
            active = np.arange(length)
            gen_map = None
        else:
            theta = pattern.mask(planned.block)
            length = generator_length(planned.kind, *planned.shape)
            active = np.flatnonzero(mask_generator(theta, planned.kind))
            gen_map = _generator_map(planned.kind, theta, cache)
        deleted = weight is EXCLUDED
        segments.append(
            Segment(
                name=planned.name,
                block=planned.block,
                part=planned.part,
                kind=planned.kind,
                shape=planned.shape,
                weight=weight,
                offset=offset,
                length=length,
                active=active,
                deleted=deleted,
            )
        )
        if deleted:
            continue
        offset += length
        if active.size == 0:
            continue
        stack = []
        for row in row_names:
            coeff = planned.rows.get(row)
            if coeff is None:
                stack.append(sparse.csr_matrix((row_sizes[row], active.size)))
                continue
            if gen_map is not None:
                coeff = coeff @ gen_map
            stack.append(coeff.tocsc()[:, active] / weight)
        columns.append(sparse.vstack(stack, format='csr'))

    layout = ColumnLayout(tuple(segments), case, n, m, real_only)
    full_rows = sum(row_sizes[row] for row in row_names)
    A = sparse.hstack(columns, format='csr') if columns else sparse.csr_matrix((full_rows, 0))
    A.eliminate_zeros()

    res = residuals(system, sol)
    rhs = np.concatenate([res.Q.real, res.R.real]) if real_only else res.realified()

    empty_rows = np.diff(A.indptr) == 0
    if np.any(empty_rows & (rhs != 0)):
        bad = np.flatnonzero(empty_rows & (rhs != 0))
        raise InfeasibleError(
            f'{bad.size} residual row(s) cannot be absorbed: every admissible '
            'column for them is excluded or masked out'
        )
    row_index = np.flatnonzero(~empty_rows)
    if row_index.size < full_rows:
        logger.debug('dropping %d structurally empty rows', full_rows - row_index.size)
        A = A[row_index]
        rhs = rhs[row_index]

    logger.debug(
        'assembled %s%s: %d x %d active of %d x %d',
        case.name,
        ' (real)' if real_only else '',
        A.shape[0],
        A.shape[1],
        full_rows,
        layout.total_length,
    )
    return AssembledSystem(A=A, rhs=rhs, layout=layout, row_index=row_index, full_rows=full_rows)


def _check_rank(R, rank_tol):
    diag = np.abs(np.diag(R))
    if diag.size == 0:
        return
    largest = diag.max()
    if not diag.min() > rank_tol * largest:
        raise RankDeficiencyError(
            f'constraint matrix is rank deficient: |R_kk| ratio '
            f'{(diag.min() / largest) if largest else 0.0:.3e} <= {rank_tol:.1e}; '
            'check EXCLUDED weights'
        )


def _triangular_factor(At, chunk_rows):
    """R of At = QR accumulated over row chunks (tall-skinny QR)"""
    r = At.shape[1]
    R = np.zeros((0, r))
    for start, stop in chunks(At.shape[0], chunk_rows):
        stacked = np.vstack([R, At[start:stop].toarray()])
        R = scipy.linalg.qr(stacked, mode='r', check_finite=False)[0][: min(stacked.shape)]
    return R


def _seminormal_solve(A, R, b):
    """z = A^T w with R^T R w = b, plus one refinement step"""
    def correction(res):
        y = scipy.linalg.solve_triangular(R, res, trans='T', check_finite=False)
        return A.T @ scipy.linalg.solve_triangular(R, y, check_finite=False)

    z = correction(b)
    return z + correction(b - A @ z)


def min_norm_solve(sys, rank_tol=DEFAULT_SETTINGS.rank_tol, dense_limit=DEFAULT_SETTINGS.dense_limit,
                   chunk_rows=DEFAULT_SETTINGS.chunk_rows):
    """Minimum 2-norm solution of ``sys.A z = sys.rhs`` over the active
    columns.

    Rows are scaled to unit norm first; that leaves the solution set
    unchanged. Small systems use the thin QR of A^T; above `dense_limit`
    entries the triangular factor is accumulated chunk by chunk and the
    solution comes from corrected semi-normal equations.

    Raises:
        RankDeficiencyError: A is not of full row rank
    """
    A, b = sys.A, np.asarray(sys.rhs, dtype=float)
    rows, cols = A.shape
    if rows == 0:
        return np.zeros(cols)
    if cols < rows:
        raise RankDeficiencyError(f'{rows} constraints but only {cols} admissible columns')

    row_norms = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
    if not np.all(row_norms > 0):
        zero = int(np.flatnonzero(~(row_norms > 0))[0])
        raise RankDeficiencyError(f'constraint row {zero} is zero or not finite; check EXCLUDED weights')
    scale = sparse.diags(1.0 / row_norms)
    As = (scale @ A).tocsr()
    bs = b / row_norms

    if rows * cols <= dense_limit:
        Q, R = scipy.linalg.qr(As.T.toarray(), mode='economic', check_finite=False)
        _check_rank(R, rank_tol)
        y = scipy.linalg.solve_triangular(R, bs, trans='T', check_finite=False)
        z = Q @ y
    else:
        logger.info('using blocked factorization for a %d x %d system', rows, cols)
        R = _triangular_factor(As.T.tocsr(), chunk_rows)
        _check_rank(R, rank_tol)
        z = _seminormal_solve(As, R, bs)

    residual = float(np.linalg.norm(A @ z - b))
    a_norm = math.sqrt(float(A.multiply(A).sum()))
    bound = 1e-12 * (a_norm * float(np.linalg.norm(z)) + float(np.linalg.norm(b)))
    if residual > bound:
        logger.warning('minimum-norm residual %.3e exceeds %.3e', residual, bound)
    return z


def reconstruct_perturbations(z_opt, layout, pattern=None, w=None, case=None):
    """Turns a full generator vector back into perturbation blocks.

    Args:
        z_opt - vector of length ``layout.total_length``
        layout (ColumnLayout)
        pattern (SparsityPattern) - when given, the output is checked
                                    against it
        w (Weights) - defaults to the weights recorded in the layout
        case (StructureCase) - must match the layout when given

    Raises:
        DimensionError: z_opt or case does not fit the layout
    """
    z_opt = np.asarray(z_opt, dtype=float)
    if z_opt.shape != (layout.total_length,):
        raise DimensionError(f'z has length {z_opt.size}, layout expects {layout.total_length}')
    if case is not None and case is not layout.case:
        raise DimensionError(f'layout was built for {layout.case.name}, not {case.name}')
    weights = w.block_weights(layout.case) if w is not None else None
    n, m = layout.n, layout.m
    D_S = {n: build_scalings(n), m: build_scalings(m)}

    shapes = {'E': (n, n), 'F': (m, n), 'H': (m, n), 'G': (m, m), 'q': (n,), 'r': (m,)}
    parts = {block: {'re': np.zeros(shape), 'im': np.zeros(shape)} for block, shape in shapes.items()}
    for seg in layout.segments:
        if seg.deleted:
            continue
        weight = weights[seg.block] if weights is not None else seg.weight
        values = z_opt[seg.offset : seg.stop] / weight
        if seg.kind is None:
            parts[seg.block][seg.part] = values
        elif seg.kind is GeneratorKind.Full:
            parts[seg.block][seg.part] = unvec(values, seg.shape)
        elif seg.kind is GeneratorKind.SymLower:
            order = seg.shape[0]
            parts[seg.block][seg.part] = unvec_sym(values / D_S[order][0].diagonal(), order)
        else:
            order = seg.shape[0]
            parts[seg.block][seg.part] = unvec_skew(values / D_S[order][1].diagonal(), order)

    blocks = {block: p['re'] + 1j * p['im'] for block, p in parts.items()}
    perturbations = PerturbationSet(
        blocks['E'],
        blocks['F'],
        None if layout.case.aliases_H else blocks['H'],
        blocks['G'],
        blocks['q'],
        blocks['r'],
    )
    if pattern is not None:
        violations = count_mask_violations(perturbations, pattern, layout.case)
        if violations:
            raise DimensionError(f'{violations} perturbation entries fall outside the pattern')
    return perturbations


def count_mask_violations(p, pattern, case):
    blocks = ('E', 'F', 'G') if case.aliases_H else ('E', 'F', 'H', 'G')
    perturbations = p.blocks()
    return int(
        sum(np.count_nonzero((perturbations[b] != 0) & (pattern.mask(b) == 0)) for b in blocks)
    )


def verify_perturbation(system, sol, p, pattern=None, weights=None):
    """Measures how well `p` makes `sol` an exact solution of a perturbed
    system with the structure of `system`.

    Args:
        pattern (SparsityPattern) - masks to check; None skips the count
        weights (Weights) - for the weighted norm; relative by default

    Returns:
        PerturbationDiagnostics
    """
    sol.check(system)
    case = system.case
    u, pv = sol.u_hat, sol.p_hat
    dH = p.dF if case.aliases_H else p.dH
    top = (system.E + p.dE) @ u + (system.F + p.dF).conj().T @ pv - (system.q + p.dq)
    bottom = (system.H + dH) @ u + (system.G + p.dG) @ pv - (system.r + p.dr)
    residual = float(np.linalg.norm(np.concatenate([top, bottom])))

    dev_E = float(np.linalg.norm(p.dE - p.dE.conj().T)) if case.hermitian_E else None
    dev_G = float(np.linalg.norm(p.dG - p.dG.conj().T)) if case.hermitian_G else None
    violations = count_mask_violations(p, pattern, case) if pattern is not None else 0

    try:
        weights = weights or default_relative_weights(system, exclude_zero_rhs=True)
        norm = weighted_norm(p, weights, case)
    except WeightError as e:
        logger.warning('weighted norm unavailable: %s', e)
        norm = None
    return PerturbationDiagnostics(
        residual_norm=residual,
        hermitian_deviation_E=dev_E,
        hermitian_deviation_G=dev_G,
        mask_violations=violations,
        weighted_norm=norm,
    )


def _check_bookkeeping(system, sol, xi, diagnostics, rtol):
    """Warns when the reconstructed perturbations do not reproduce `xi` or
    leave a residual above `rtol` times the problem scale
    """
    scale = system.matrix_norm() * float(np.linalg.norm(sol.x)) + float(np.linalg.norm(system.rhs()))
    consistent = diagnostics.residual_norm <= rtol * scale
    if not consistent:
        logger.warning(
            'perturbed residual %.3e exceeds %.1e times the problem scale %.3e',
            diagnostics.residual_norm, rtol, scale,
        )
    if diagnostics.weighted_norm is not None and abs(diagnostics.weighted_norm - xi) > rtol * xi:
        consistent = False
        logger.warning('weighted norm %.6e of the perturbations differs from xi %.6e', diagnostics.weighted_norm, xi)
    return consistent


def _structured(system, sol, w, preserve_sparsity, real_only, settings):
    w = w or default_relative_weights(system)
    w.validate(system.case)
    pattern = derive_pattern(system) if preserve_sparsity else SparsityPattern.ones(system.n, system.m)
    assembled = assemble(system, sol, pattern, w, system.case, real_only=real_only)
    z_active = min_norm_solve(
        assembled,
        rank_tol=settings.rank_tol,
        dense_limit=settings.dense_limit,
        chunk_rows=settings.chunk_rows,
    )
    z = assembled.layout.scatter(z_active)
    xi = float(np.linalg.norm(z))
    perturbations = reconstruct_perturbations(z, assembled.layout, pattern if preserve_sparsity else None)
    diagnostics = verify_perturbation(
        system, sol, perturbations, pattern if preserve_sparsity else None, w
    )
    _check_bookkeeping(system, sol, xi, diagnostics, settings.verify_rtol)
    logger.info(
        '%s structured backward error (%s sparsity): %.4e',
        system.case.name,
        'with' if preserve_sparsity else 'without',
        xi,
    )
    return BackwardErrorReport(
        xi=xi,
        case=system.case,
        sparsity_preserved=preserve_sparsity,
        perturbations=perturbations,
        perturbed_residual_norm=diagnostics.residual_norm,
        weighted_norm_of_perturbations=diagnostics.weighted_norm,
        diagnostics=diagnostics,
    )


def compute_structured_be(system, sol, w=None, preserve_sparsity=True, settings=DEFAULT_SETTINGS):
    """Structured backward error of `sol` for the case of `system`.

    Args:
        system (GsppSystem)
        sol (CandidateSolution)
        w (Weights) - relative weights when None
        preserve_sparsity (bool) - restrict perturbations to the nonzero
                                   pattern of each block
        settings (Settings) - numerical tolerances

    Returns:
        BackwardErrorReport
    """
    return _structured(system, sol, w, preserve_sparsity, False, settings)


def reduce_real(system, sol, w=None, preserve_sparsity=True, settings=DEFAULT_SETTINGS):
    """Same result as compute_structured_be for real data, from the half
    size system of real parts only. The right-hand-side perturbations are
    real as well.

    Raises:
        StructureError: any block, right-hand side or solution entry has a
                        nonzero imaginary part
    """
    if not system.is_real or not sol.is_real:
        raise StructureError('reduce_real needs real blocks, right-hand sides and solution')
    return _structured(system, sol, w, preserve_sparsity, True, settings)


@dataclass(frozen=True, eq=False)
class Analysis:
    """All backward errors of one candidate solution"""

    unstructured: float
    residual_norm: float
    relative_residual: float
    reports: Dict[str, BackwardErrorReport]

    @property
    def sparse(self):
        return self.reports.get('preserve')

    @property
    def dense(self):
        return self.reports.get('ignore')


SPARSITY_MODES = {'preserve': (True,), 'ignore': (False,), 'both': (True, False)}


def analyze(system, sol, w=None, sparsity='both', settings=DEFAULT_SETTINGS):
    """Unstructured and structured backward errors of `sol` in one call.
    Real data goes through reduce_real.

    Args:
        sparsity (str) - 'preserve', 'ignore' or 'both'
    """
    try:
        modes = SPARSITY_MODES[sparsity]
    except KeyError:
        raise ValueError(f"sparsity must be one of {sorted(SPARSITY_MODES)}, got '{sparsity}'")
    compute = reduce_real if system.is_real and sol.is_real else compute_structured_be
    reports = {
        'preserve' if preserve else 'ignore': compute(system, sol, w, preserve, settings)
        for preserve in modes
    }
    residual = residuals(system, sol).norm()
    f_norm = float(np.linalg.norm(system.rhs()))
    return Analysis(
        unstructured=rigal_gaches(system, sol),
        residual_norm=residual,
        relative_residual=residual / f_norm if f_norm else math.inf,
        reports=reports,
    )
