"""File-coordinated SPMD evaluation of an expression over a 1-D grid."""
from .expr import PAPER_EXPRESSION, eval_grid, eval_scalar, parse, to_text
from .kernel import BACKEND

__version__ = "0.1.0"

__all__ = ["PAPER_EXPRESSION", "BACKEND", "eval_grid", "eval_scalar",
           "parse", "to_text", "__version__"]
