"""Backward-pass kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``ERCI_PURE_PYTHON`` is set to a non-empty value, the
plain-Python reference implementation is selected.
"""
import os

from . import _pykernels as python

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and not os.environ.get("ERCI_PURE_PYTHON"):
    backend = compiled
else:
    backend = python

BACKEND = backend.BACKEND
evaluate = backend.evaluate
soft_backward = backend.soft_backward
lex_backward = backend.lex_backward
min_pass = backend.min_pass
min_entropy_pass = backend.min_entropy_pass

__all__ = [
    "BACKEND", "backend", "compiled", "python",
    "evaluate", "soft_backward", "lex_backward", "min_pass", "min_entropy_pass",
]
