"""Support of the Brown measure of x b_{s,tau}: lifetime function, domains and checks."""

from .errors import (BlowupError, BrownmapError, ConsistencyError, ConvergenceError,
                     DomainError, LawError)
from .measure import DensityPiece, Law

__version__ = "0.1.0"
