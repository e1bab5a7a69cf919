"""interp_lab: multiclass SVMs, minimum-norm interpolation and their
equivalence in overparameterized regimes."""

from . import datagen, diagnostics, equivalence, linalg, metrics, rng, solvers
from .errors import InterpLabError

__version__ = "0.1.0"

__all__ = ["datagen", "diagnostics", "equivalence", "linalg", "metrics", "rng", "solvers", "InterpLabError"]
