"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
implementation is used.  Setting ``ISRSGN_PURE_PYTHON=1`` forces the numpy
path as the default (handy for benchmarking and debugging).
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_forced = os.environ.get("ISRSGN_PURE_PYTHON", "").lower() in ("1", "true", "yes")

if _compiled is not None and not _forced:
    BACKEND = "cython"
    link_values = _compiled.link_values
else:
    BACKEND = "python"
    link_values = _kernels_py.link_values


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name=None):
    """Return the ``link_values`` implementation for ``name`` ('cython', 'python' or None)."""
    if name is None:
        return link_values
    if name == "python":
        return _kernels_py.link_values
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernel extension is not available")
        return _compiled.link_values
    raise ValueError(f"unknown kernel backend {name!r}")
