"""Select the orbit kernel: the compiled extension if present, else Python.

Set ``FLATSPOT_PURE_PYTHON=1`` to force the fallback (the benchmark and the
twin tests do this to compare both).
"""

from __future__ import annotations

import os

from . import _kernel_py

KIND_CANONICAL = _kernel_py.KIND_CANONICAL
KIND_RIGID = _kernel_py.KIND_RIGID

_compiled = None
if not os.environ.get("FLATSPOT_PURE_PYTHON"):
    try:
        from . import _kernel as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None

impl = _compiled if _compiled is not None else _kernel_py
BACKEND = impl.BACKEND

advance = impl.advance
trajectory = impl.trajectory


def backends() -> dict:
    """All importable kernel implementations keyed by name."""
    out = {"python": _kernel_py}
    if _compiled is not None:
        out[_compiled.BACKEND] = _compiled
    else:
        try:
            from . import _kernel as ext  # type: ignore[attr-defined]

            out[ext.BACKEND] = ext
        except ImportError:
            pass
    return out
