#!/usr/bin/env python

"""
    cli.py
    ~~~~~~

    The `gsppbe` command line utility

    A system directory holds E.mtx, F.mtx, [H.mtx,] G.mtx, q.mtx, r.mtx,
    optionally a candidate solution u.mtx, p.mtx and a meta.json naming
    the structure case. Perturbation directories hold dE.mtx, dF.mtx,
    [dH.mtx,] dG.mtx, dq.mtx and dr.mtx.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

import argparse
import logging
import os
import sys

import jsonschema
import simplejson as json

from gsppbe import __title__, __version__, mmio
from gsppbe.config import Config, default_threshold
from gsppbe.core import CandidateSolution, GsppSystem, PerturbationSet, StructureCase, default_relative_weights, derive_pattern
from gsppbe.errors import DimensionError, MatrixMarketError, NumericalError, StructureError, WeightError
from gsppbe.helper_classes.reports import (
    AnalysisReport,
    DiagnosticsReport,
    StabilityTable,
    validate,
    weights_from_json,
)
from gsppbe.problems import FIXTURES, FixtureId, load_fixture
from gsppbe.solvers import Method, solve, stability_report
from gsppbe.structured_be import SPARSITY_MODES, analyze, verify_perturbation
from gsppbe.unstructured_be import residuals
from gsppbe.utils import atomic_write

logger = logging.getLogger('gsppbe.cli')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_NUMERICAL = 3

META_FILE = 'meta.json'


class UsageError(Exception):
    """Arguments that parse but do not make sense together"""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f'{self.prog}: error: {message}\n')


def setup_logger(level=logging.WARNING, log_file=None):
    """
    :param level: console log level
    :param log_file: optional path of a DEBUG level log file
    :returns: a tuple of the logger instance and the console handler instance
    """
    logger = logging.getLogger(__title__)
    logger.setLevel(logging.DEBUG)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    log_formatter = logging.Formatter('%(name)s;%(levelname)-8s;%(asctime)s %(message)s')
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(log_formatter)
    logger.addHandler(console_handler)
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(log_formatter)
        logger.addHandler(file_handler)
    return logger, console_handler


def _mtx(directory, name):
    return os.path.join(directory, f'{name}.mtx')


def read_meta(directory):
    path = os.path.join(directory, META_FILE)
    if not os.path.exists(path):
        return {}
    with open(path) as fh:
        meta = json.load(fh)
    validate(meta, 'meta.schema.json')
    return meta


def resolve_case(tag, directory):
    """The case from --case, else from the directory's meta.json"""
    if tag:
        return StructureCase.from_tag(tag)
    meta = read_meta(directory)
    if 'case' not in meta:
        raise UsageError(f'no --case given and no case recorded in {os.path.join(directory, META_FILE)}')
    return StructureCase(meta['case'])


def load_system(directory, case):
    H = None
    if not case.aliases_H or os.path.exists(_mtx(directory, 'H')):
        H = mmio.read_matrix(_mtx(directory, 'H'))
    return GsppSystem(
        mmio.read_matrix(_mtx(directory, 'E')),
        mmio.read_matrix(_mtx(directory, 'F')),
        H,
        mmio.read_matrix(_mtx(directory, 'G')),
        mmio.read_vector(_mtx(directory, 'q')),
        mmio.read_vector(_mtx(directory, 'r')),
        case,
    )


def load_solution(directory):
    return CandidateSolution(mmio.read_vector(_mtx(directory, 'u')), mmio.read_vector(_mtx(directory, 'p')))


def write_system(directory, system, solution=None):
    os.makedirs(directory, exist_ok=True)
    case = system.case
    mmio.write_matrix(_mtx(directory, 'E'), system.E, hermitian=case.hermitian_E)
    mmio.write_matrix(_mtx(directory, 'F'), system.F)
    if not case.aliases_H:
        mmio.write_matrix(_mtx(directory, 'H'), system.H)
    mmio.write_matrix(_mtx(directory, 'G'), system.G, hermitian=case.hermitian_G)
    mmio.write_vector(_mtx(directory, 'q'), system.q)
    mmio.write_vector(_mtx(directory, 'r'), system.r)
    if solution is not None:
        mmio.write_vector(_mtx(directory, 'u'), solution.u_hat)
        mmio.write_vector(_mtx(directory, 'p'), solution.p_hat)


def write_perturbations(directory, p, case):
    os.makedirs(directory, exist_ok=True)
    mmio.write_matrix(_mtx(directory, 'dE'), p.dE, hermitian=case.hermitian_E)
    mmio.write_matrix(_mtx(directory, 'dF'), p.dF)
    if not case.aliases_H:
        mmio.write_matrix(_mtx(directory, 'dH'), p.dH)
    mmio.write_matrix(_mtx(directory, 'dG'), p.dG, hermitian=case.hermitian_G)
    mmio.write_vector(_mtx(directory, 'dq'), p.dq)
    mmio.write_vector(_mtx(directory, 'dr'), p.dr)


def load_perturbations(directory, case):
    dH = None if case.aliases_H else mmio.read_matrix(_mtx(directory, 'dH'))
    return PerturbationSet(
        mmio.read_matrix(_mtx(directory, 'dE')),
        mmio.read_matrix(_mtx(directory, 'dF')),
        dH,
        mmio.read_matrix(_mtx(directory, 'dG')),
        mmio.read_vector(_mtx(directory, 'dq')),
        mmio.read_vector(_mtx(directory, 'dr')),
    )


def load_weights(args, case):
    """Weights from --weights-file, or None for relative weights"""
    if args.weights != 'file':
        return None
    if not args.weights_file:
        raise UsageError('--weights file needs --weights-file PATH')
    with open(args.weights_file) as fh:
        return weights_from_json(json.load(fh), case)


def emit(report, out):
    report.validate()
    if out:
        report.write(out)
        logger.info('wrote %s', out)
    else:
        print(report.dumps())


def load_settings(args):
    settings = Config(args.config).get_config()
    overrides = {
        'rank_tol': getattr(args, 'rank_tol', None),
        'dense_limit': getattr(args, 'dense_limit', None),
    }
    return settings._replace(**{key: value for key, value in overrides.items() if value is not None})


def fixture_id(args, name, **kwargs):
    try:
        return FixtureId(
            name,
            seed=args.seed,
            n=args.n,
            m=args.m,
            density=args.density,
            case=StructureCase.from_tag(args.case or 'i'),
            **kwargs,
        )
    except ValueError as e:
        raise UsageError(str(e))


def cmd_analyze(args, settings):
    case = resolve_case(args.case, args.directory)
    system = load_system(args.directory, case)
    sol = load_solution(args.solution_dir or args.directory)
    weights = load_weights(args, case) or default_relative_weights(system)
    analysis = analyze(system, sol, weights, sparsity=args.sparsity, settings=settings)

    emitted = {}
    if args.emit_perturbations:
        for mode, report in analysis.reports.items():
            target = os.path.join(args.emit_perturbations, mode)
            write_perturbations(target, report.perturbations, case)
            emitted[mode] = target
            logger.info('optimal perturbations (%s sparsity) written to %s', mode, target)

    emit(AnalysisReport(system, weights, analysis, emitted), args.out)
    return EXIT_OK


def _sweep(args):
    """(parameter, FixtureId) pairs the stability command runs"""
    name = args.fixture
    if name == 'example4':
        first = 4 if args.t is None else args.t
        values = range(first, (args.t_max or first) + 1)
        return [(t, fixture_id(args, name, t=t)) for t in values]
    if name == 'random-study':
        first = 5 if args.k is None else args.k
        values = range(first, (args.k_max or first) + 1, args.k_step)
        return [(k, fixture_id(args, name, k=k)) for k in values]
    return [(None, fixture_id(args, name))]


def cmd_stability(args, settings):
    if bool(args.fixture) == bool(args.input):
        raise UsageError('give exactly one of --fixture NAME or --input DIR')
    method = Method(args.solver)
    tol = settings.gmres_tol if args.tol is None else args.tol
    maxit = args.maxit if args.maxit is not None else (settings.gmres_maxit or None)
    threshold = default_threshold(settings) if args.threshold is None else args.threshold

    if args.input:
        case = resolve_case(args.case, args.input)
        instances = [(None, load_system(args.input, case))]
        weights = load_weights(args, case)
        label = os.path.basename(os.path.normpath(args.input))
    else:
        sweep = _sweep(args)
        if not sweep:
            raise UsageError('empty sweep: the upper bound is below the first value')
        instances = ((parameter, load_fixture(fid).system) for parameter, fid in sweep)
        weights = None
        label = args.fixture

    table = StabilityTable(label, method, threshold, tol=tol, maxit=maxit)
    for parameter, system in instances:
        if weights is None and args.weights == 'file':
            weights = load_weights(args, system.case)
        trace = solve(system, method, tol=tol, maxit=maxit)
        classification = stability_report(system, trace.solution, weights, threshold, settings)
        row = table.add(parameter, system, trace, classification)
        logger.info(
            '%s%s: iterations %d, relres %.3e, unstructured %.4e, sparse %.4e, dense %.4e',
            label,
            '' if parameter is None else f' [{parameter}]',
            row['iterations'],
            row['relative_residual'],
            row['unstructured_be'],
            row['structured_be_sparse'],
            row['structured_be'],
        )

    if args.csv:
        table.write_csv(args.csv)
    emit(table, args.out)
    return EXIT_OK


def cmd_verify(args, settings):
    case = resolve_case(args.case, args.system_dir)
    system = load_system(args.system_dir, case)
    sol = load_solution(args.solution_dir or args.system_dir)
    p = load_perturbations(args.perturbation_dir, case)
    weights = load_weights(args, case)
    diagnostics = verify_perturbation(system, sol, p, derive_pattern(system), weights)
    emit(DiagnosticsReport(case, diagnostics, residuals(system, sol).norm()), args.out)
    return EXIT_OK


def cmd_export_fixture(args, settings):
    kwargs = {}
    if args.name == 'example4':
        kwargs['t'] = 4 if args.t is None else args.t
    if args.name == 'random-study':
        kwargs['k'] = 5 if args.k is None else args.k
    fixture = load_fixture(fixture_id(args, args.name, **kwargs))
    system = fixture.system
    solution = fixture.solution
    exact = solution is None and fixture.exact_solution is not None
    if exact:
        solution = system.split(fixture.exact_solution)
    write_system(args.outdir, system, solution)

    meta = {'name': args.name, 'case': system.case.value, 'has_solution': solution is not None}
    if exact:
        meta['exact_solution'] = True
    validate(meta, 'meta.schema.json')
    with atomic_write(os.path.join(args.outdir, META_FILE)) as fh:
        json.dump(meta, fh, indent=2)
    logger.info('exported %s (%s, n=%d, m=%d) to %s', args.name, system.case.name, system.n, system.m, args.outdir)
    return EXIT_OK


def argparser():
    """Parses command line options and returns an args object"""
    parser = ArgumentParser(prog=__title__, description='Structured backward errors of generalized saddle point problems')
    parser.add_argument(
        '-v',
        help="Displays the currently installed version of gsppbe",
        action="version",
        version=f"{__title__} v{__version__}",
    )
    parser.add_argument('-q', '--quiet', action='store_true', help='Only log errors')
    parser.add_argument('--verbose', action='count', default=0, help='Log progress (twice for debug output)')
    parser.add_argument('--log-file', default=None, help='Also log everything to this file')
    parser.add_argument('--config', default=None, help='Settings file (default ~/.config/gsppbe.ini)')
    subparsers = parser.add_subparsers(dest='command')

    numerics = ArgumentParser(add_help=False)
    numerics.add_argument('--rank-tol', type=float, default=None, help='Rank tolerance of the minimum-norm solve')
    numerics.add_argument('--dense-limit', type=int, default=None, help='rows*cols above which the blocked solve is used')

    weighting = ArgumentParser(add_help=False)
    weighting.add_argument('--weights', choices=('relative', 'file'), default='relative')
    weighting.add_argument('--weights-file', default=None, help='JSON weights document for --weights file')

    output = ArgumentParser(add_help=False)
    output.add_argument('--out', default=None, help='Write the JSON report here instead of stdout')
    output.add_argument('--case', choices=[c.value for c in StructureCase], default=None)

    fixtures = ArgumentParser(add_help=False)
    fixtures.add_argument('--t', type=int, default=None, help='Grid size of example4')
    fixtures.add_argument('--k', type=int, default=None, help='Size parameter of random-study (n = 3k, m = 2k)')
    fixtures.add_argument('--seed', type=int, default=0)
    fixtures.add_argument('--n', type=int, default=None)
    fixtures.add_argument('--m', type=int, default=None)
    fixtures.add_argument('--density', type=float, default=1.0)

    analyze_parser = subparsers.add_parser(
        'analyze', parents=[numerics, weighting, output], help='Backward errors of a candidate solution'
    )
    analyze_parser.add_argument('directory', help='System directory')
    analyze_parser.add_argument('--solution-dir', default=None, help='Directory with u.mtx and p.mtx')
    analyze_parser.add_argument('--sparsity', choices=sorted(SPARSITY_MODES), default='both')
    analyze_parser.add_argument('--emit-perturbations', default=None, metavar='DIR')
    analyze_parser.set_defaults(func=cmd_analyze)

    stability_parser = subparsers.add_parser(
        'stability', parents=[numerics, weighting, output, fixtures], help='Solve and classify backward stability'
    )
    stability_parser.add_argument('--fixture', choices=FIXTURES, default=None)
    stability_parser.add_argument('--input', default=None, metavar='DIR', help='System directory to solve')
    stability_parser.add_argument('--t-max', type=int, default=None)
    stability_parser.add_argument('--k-max', type=int, default=None)
    stability_parser.add_argument('--k-step', type=int, default=5)
    stability_parser.add_argument('--solver', choices=[m.value for m in Method], default='gmres')
    stability_parser.add_argument('--tol', type=float, default=None)
    stability_parser.add_argument('--maxit', type=int, default=None)
    stability_parser.add_argument('--threshold', type=float, default=None)
    stability_parser.add_argument('--csv', default=None, help='Also write the rows as CSV')
    stability_parser.set_defaults(func=cmd_stability)

    verify_parser = subparsers.add_parser(
        'verify', parents=[weighting, output], help='Check a perturbation set against a system'
    )
    verify_parser.add_argument('system_dir')
    verify_parser.add_argument('perturbation_dir')
    verify_parser.add_argument('--solution-dir', default=None)
    verify_parser.set_defaults(func=cmd_verify)

    export_parser = subparsers.add_parser(
        'export-fixture', parents=[fixtures], help='Write an embedded fixture as Matrix Market files'
    )
    export_parser.add_argument('name', choices=FIXTURES)
    export_parser.add_argument('outdir')
    export_parser.add_argument('--case', choices=[c.value for c in StructureCase], default=None)
    export_parser.set_defaults(func=cmd_export_fixture)
    return parser


def main(argv=None) -> int:
    parser = argparser()
    args = parser.parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    setup_logger(level, args.log_file)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        settings = load_settings(args)
    except ValueError as e:
        sys.stderr.write(f'{__title__}: error: {e}\n')
        return EXIT_PARSE

    try:
        return args.func(args, settings)
    except UsageError as e:
        sys.stderr.write(f'{__title__}: error: {e}\n')
        return EXIT_USAGE
    except (MatrixMarketError, json.JSONDecodeError, jsonschema.ValidationError, OSError) as e:
        sys.stderr.write(f'{__title__}: error: {e}\n')
        return EXIT_PARSE
    except (NumericalError, DimensionError, StructureError, WeightError) as e:
        sys.stderr.write(f'{__title__}: error: {e}\n')
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
