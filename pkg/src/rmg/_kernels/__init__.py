"""Kernel lane selection.

The compiled extension (``_core``, built from ``_core.pyx``) is preferred;
the pure-NumPy twin in :mod:`pykernels` is used when the extension is
missing or when ``RMG_PURE_PYTHON=1`` is set. Both lanes expose the same
``filter_path`` / ``simulate_core`` contract.
"""
from __future__ import annotations

import os

from . import pykernels
from .pykernels import A0_ZERO, NO_ROOT, NONFINITE_LL, NONPOS_V, OK, STATUS_MESSAGES

_FORCE_PY = os.environ.get("RMG_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}

if not _FORCE_PY:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = pykernels
        BACKEND = "python"
else:
    _impl = pykernels
    BACKEND = "python"

filter_path = _impl.filter_path
simulate_core = _impl.simulate_core
student_t_const = pykernels.student_t_const
step_core = pykernels.step_core


def backend() -> str:
    """Active kernel lane: ``"cython"`` or ``"python"``."""
    return BACKEND


__all__ = [
    "OK",
    "NO_ROOT",
    "NONPOS_V",
    "A0_ZERO",
    "NONFINITE_LL",
    "STATUS_MESSAGES",
    "BACKEND",
    "backend",
    "filter_path",
    "simulate_core",
    "step_core",
    "student_t_const",
    "pykernels",
]
