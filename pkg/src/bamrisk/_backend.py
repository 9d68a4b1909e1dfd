"""Kernel backend selection.

Hot kernels are written once against numpy arrays and compiled with numba by
default.  Setting ``BAM_BACKEND=python`` (or any falsy ``BAM_NUMBA``) selects
the uncompiled fallback, which runs the same code object; ``BAM_BACKEND=numba``
forces compilation and fails loudly if numba is unavailable.
"""

from __future__ import annotations

import os

__all__ = ["NUMBA_AVAILABLE", "default_backend", "resolve_backend", "jit_twin"]

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    NUMBA_AVAILABLE = False


def _env_backend() -> str | None:
    raw = os.environ.get("BAM_BACKEND", "").strip().lower()
    if raw in ("python", "numpy"):
        return "python"
    if raw == "numba":
        return "numba"
    if os.environ.get("BAM_NUMBA", "").strip() in ("0", "false", "no"):
        return "python"
    return None


def default_backend() -> str:
    forced = _env_backend()
    if forced == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("BAM_BACKEND=numba but numba is not importable")
    if forced is not None:
        return forced
    return "numba" if NUMBA_AVAILABLE else "python"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in ("numba", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def jit_twin(func):
    """Return (python_impl, jitted_impl); the jitted twin is None without numba."""
    if not NUMBA_AVAILABLE:
        return func, None
    return func, numba.njit(cache=True, nogil=True)(func)
