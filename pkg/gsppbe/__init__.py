#!/usr/bin/env python

"""
    __init__.py
    ~~~~~~~~~~~

    Structured backward errors for generalized saddle point problems.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""

__title__ = 'gsppbe'
__version__ = '0.1.0'
__author__ = 'gsppbe authors'


from gsppbe.core import (
    EXCLUDED,
    CandidateSolution,
    GsppSystem,
    PerturbationSet,
    SparsityPattern,
    StructureCase,
    Weights,
)
from gsppbe.structured_be import compute_structured_be, reduce_real
from gsppbe.unstructured_be import residuals, rigal_gaches
