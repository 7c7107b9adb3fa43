"""Integration-kernel selection: compiled extension with NumPy fallback.

The compiled kernel is preferred when importable; set TREESWARM_BACKEND to
"python" or "compiled" to force a choice (the benchmark and the
cross-validation tests do).
"""

import os

from . import _reference

try:
    from . import _speedup
except ImportError:  # pragma: no cover - depends on the build environment
    _speedup = None

DEFAULT_BACKEND = "compiled" if _speedup is not None else "python"


def available_backends():
    names = ["python"]
    if _speedup is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name=None):
    """Resolve a backend module by name (None/"auto" picks the default)."""
    name = name or os.environ.get("TREESWARM_BACKEND") or "auto"
    if name == "auto":
        name = DEFAULT_BACKEND
    if name == "python":
        return _reference
    if name == "compiled":
        if _speedup is None:
            raise RuntimeError("compiled kernel not built; use backend='python'")
        return _speedup
    raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'python'")


def backend_name(module):
    return "python" if module is _reference else "compiled"
