"""denseorbit - explicit lattice isometries approximating positive planes, with certificates"""

from .errors import DenseOrbitError

__version__ = "0.1.0"
__all__ = ['DenseOrbitError']
