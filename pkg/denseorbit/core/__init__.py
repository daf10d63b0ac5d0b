"""Reduction pipeline, density search and certificates"""

from .certificate import Certificate, verify_certificate
from .reduction import HyperbolicProblem, descend
from .search import SearchConfig, approximate_plane, isotropic_case

__all__ = [
    'Certificate',
    'verify_certificate',
    'HyperbolicProblem',
    'descend',
    'SearchConfig',
    'approximate_plane',
    'isotropic_case',
]
