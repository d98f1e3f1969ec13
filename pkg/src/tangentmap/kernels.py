"""Backend selection for the iteration kernels.

The compiled ``_kernels`` extension is used when it was built; otherwise the
pure-Python ``_pykernels`` module.  Setting ``TANGENTMAP_PURE_PYTHON=1``
forces the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

CLS_ORIGIN = _pykernels.CLS_ORIGIN
CLS_LINE = _pykernels.CLS_LINE
CLS_ESCAPE = _pykernels.CLS_ESCAPE
CLS_INDETERMINATE = _pykernels.CLS_INDETERMINATE


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


def get_backend(name: str | None = None) -> ModuleType:
    """Return a kernel module: ``"cython"``, ``"python"`` or ``None`` for the default."""
    if name == "python":
        return _pykernels
    if name == "cython":
        mod = _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built; reinstall with Cython available")
        return mod
    if name is not None:
        raise ValueError(f"unknown backend {name!r}")
    if os.environ.get("TANGENTMAP_PURE_PYTHON") == "1":
        return _pykernels
    return _load_compiled() or _pykernels


impl = get_backend()
BACKEND: str = impl.BACKEND
