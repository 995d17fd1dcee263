"""Containers for the JSON reports written by the gsppbe command"""

import csv
import os
from urllib.request import pathname2url

import jsonschema
import simplejson as json

from gsppbe import __version__
from gsppbe.core import EXCLUDED, StructureCase, Weights
from gsppbe.utils import atomic_write, numeric_field

SCHEMATA_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.realpath(__file__))), 'schemata')

WEIGHT_FIELDS = ('alpha1', 'alpha2', 'alpha3', 'alpha4', 'beta1', 'beta2')


def validate(doc, schema_name):
    """Validates a json document against one of the bundled JSON Schemas.
    Returns:
      None
    Raises:
      jsonschema.exceptions.ValidationError if validation fails.
    """
    schemata_path = os.path.join(SCHEMATA_PATH, schema_name)
    with open(schemata_path) as schema_data:
        schema = json.load(schema_data)
        resolver = jsonschema.RefResolver('file:' + pathname2url(schemata_path), schema)
        return jsonschema.Draft4Validator(schema, resolver=resolver).validate(doc)


def _optional_number(value):
    return None if value is None else numeric_field(value)


def weights_json(w):
    """Weights as the weights file stores them

    Usage:
        >>> weights_json(Weights(1, 2, EXCLUDED, 4, 5))['alpha3']
        'excluded'
    """
    doc = {}
    for name in WEIGHT_FIELDS:
        value = getattr(w, name)
        doc[name] = EXCLUDED.value if value is EXCLUDED else value
    return doc


def weights_from_json(doc, case):
    """Reads a weights document, e.g. {"alpha1": 1.0, ..., "beta2": "excluded"}

    Raises:
        jsonschema.exceptions.ValidationError: malformed document
        WeightError: weights that do not fit `case`
    """
    validate(doc, 'weights.schema.json')
    values = {
        name: EXCLUDED if doc.get(name) == EXCLUDED.value else doc.get(name)
        for name in WEIGHT_FIELDS
    }
    return Weights(**values).validate(StructureCase(case))


def diagnostics_json(diagnostics):
    return {
        'residual_norm': numeric_field(diagnostics.residual_norm),
        'hermitian_deviation_E': _optional_number(diagnostics.hermitian_deviation_E),
        'hermitian_deviation_G': _optional_number(diagnostics.hermitian_deviation_G),
        'mask_violations': diagnostics.mask_violations,
        'structure_violations': diagnostics.structure_violations,
        'weighted_norm': _optional_number(diagnostics.weighted_norm),
    }


class Report:
    """Base class of the report documents"""

    SCHEMA = None

    def json(self):
        raise NotImplementedError

    def validate(self):
        """Validates the report's json representation against its schema.
        Raises:
           jsonschema.exceptions.ValidationError if the report is invalid.
        """
        return validate(self.json(), self.SCHEMA)

    def dumps(self):
        return json.dumps(self.json(), indent=2)

    def write(self, path):
        with atomic_write(path) as fh:
            fh.write(self.dumps())
            fh.write('\n')


class AnalysisReport(Report):
    """Backward errors of one candidate solution"""

    SCHEMA = 'report.schema.json'

    def __init__(self, system, weights, analysis, perturbations=None):
        """
        Args:
            system (GsppSystem)
            weights (Weights) - the weights the structured errors used
            analysis (Analysis)
            perturbations (dict) - sparsity mode -> directory the optimal
                                   perturbations were written to
        """
        self.system = system
        self.weights = weights
        self.analysis = analysis
        self.perturbations = perturbations or {}

    def json(self):
        structured = {}
        for mode, report in self.analysis.reports.items():
            structured[mode] = {
                'xi': numeric_field(report.xi),
                'perturbed_residual_norm': numeric_field(report.perturbed_residual_norm),
                'weighted_norm_of_perturbations': _optional_number(report.weighted_norm_of_perturbations),
                'diagnostics': diagnostics_json(report.diagnostics),
            }
        doc = {
            'version': __version__,
            'case': self.system.case.value,
            'n': self.system.n,
            'm': self.system.m,
            'weights': weights_json(self.weights),
            'unstructured_be': numeric_field(self.analysis.unstructured),
            'residual_norm': numeric_field(self.analysis.residual_norm),
            'relative_residual': numeric_field(self.analysis.relative_residual),
            'structured': structured,
        }
        if self.perturbations:
            doc['perturbations'] = dict(self.perturbations)
        return doc


class DiagnosticsReport(Report):
    """What the verify command measured for a perturbation set"""

    SCHEMA = 'diagnostics.schema.json'

    def __init__(self, case, diagnostics, unperturbed_residual_norm):
        self.case = case
        self.diagnostics = diagnostics
        self.unperturbed_residual_norm = unperturbed_residual_norm

    def json(self):
        return {
            'version': __version__,
            'case': self.case.value,
            'residual_norm': numeric_field(self.diagnostics.residual_norm),
            'unperturbed_residual_norm': numeric_field(self.unperturbed_residual_norm),
            'diagnostics': diagnostics_json(self.diagnostics),
        }


class StabilityTable(Report):
    """One row per solved instance of a sweep"""

    SCHEMA = 'stability.schema.json'

    COLUMNS = (
        'parameter',
        'case',
        'n',
        'm',
        'iterations',
        'converged',
        'relative_residual',
        'unstructured_be',
        'structured_be_sparse',
        'structured_be',
        'backward_stable',
        'strongly_backward_stable',
    )
    NUMBERS = ('relative_residual', 'unstructured_be', 'structured_be_sparse', 'structured_be')

    def __init__(self, fixture, method, threshold, tol=None, maxit=None):
        self.fixture = fixture
        self.method = method
        self.threshold = threshold
        self.tol = tol
        self.maxit = maxit
        self.rows = []

    def add(self, parameter, system, trace, classification):
        """Records a solve and its classification

        Args:
            parameter (int) - sweep value (t or k), None for single runs
            system (GsppSystem)
            trace (SolveTrace)
            classification (StabilityClassification)
        """
        relres = trace.final_relative_residual
        row = {
            'parameter': parameter,
            'case': system.case.value,
            'n': system.n,
            'm': system.m,
            'iterations': trace.iterations,
            'converged': trace.converged,
            'relative_residual': classification.relative_residual if relres is None else relres,
            'unstructured_be': classification.unstructured,
            'structured_be_sparse': classification.structured_sparse,
            'structured_be': classification.structured,
            'backward_stable': classification.backward_stable,
            'strongly_backward_stable': classification.strongly_backward_stable,
        }
        self.rows.append(row)
        return row

    def json(self):
        rows = [
            {key: numeric_field(value) if key in self.NUMBERS else value for key, value in row.items()}
            for row in self.rows
        ]
        solver = {'method': self.method.value}
        if self.method.value == 'gmres':
            solver.update({'tol': self.tol, 'maxit': self.maxit})
        return {
            'version': __version__,
            'fixture': self.fixture,
            'solver': solver,
            'threshold': numeric_field(self.threshold),
            'rows': rows,
        }

    def write_csv(self, path):
        """Writes the rows with full precision numbers for external plotting"""
        with atomic_write(path) as fh:
            writer = csv.DictWriter(fh, fieldnames=self.COLUMNS, lineterminator='\n')
            writer.writeheader()
            for row in self.rows:
                writer.writerow({key: '' if value is None else value for key, value in row.items()})
