"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when
``CORRAMSEY_PURE_PYTHON`` is set to a non-empty value, the numpy
implementation takes over.  ``BACKEND`` records which one is live.
"""
import os

from . import _kernels_py

if os.environ.get("CORRAMSEY_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

ramsey_fisher_terms = _impl.ramsey_fisher_terms
ramsey_fisher_phase_average = _impl.ramsey_fisher_phase_average
bernoulli_loglik = _impl.bernoulli_loglik


def backends():
    """Mapping of every importable backend name to its module."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
