"""Integrator kernel backends: compiled extension with pure NumPy fallback.

The compiled kernel is selected automatically when importable; set
RIGIDBROWN_BACKEND=python or =compiled to force a choice ("compiled" raises
if the extension is missing).
"""

import os

from . import python_backend

_requested = os.environ.get("RIGIDBROWN_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = python_backend
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "RIGIDBROWN_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation` with a C compiler")
        _impl = python_backend
        BACKEND = "python"

integrate_chunk = _impl.integrate_chunk


def available_backends() -> dict:
    """Importable kernel implementations keyed by name."""
    out = {"python": python_backend}
    try:
        from . import _core
        out["compiled"] = _core
    except ImportError:
        pass
    return out
