"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``MONOEXP_PURE_PYTHON=1``
to force the pure-Python fallback (the benchmark and the backend-agreement
tests do this explicitly through :func:`backend`).
"""

from __future__ import annotations

import os

from . import _purepy

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = ["BACKEND", "backend", "relation_candidates", "min_vertex_expansion", "greedy_net"]


def backend(name: str | None = None):
    """Return the kernel module called ``name`` ("compiled" or "python").

    With no name, return the module selected at import.
    """
    if name is None:
        return _active
    if name == "python":
        return _purepy
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


if _compiled is not None and os.environ.get("MONOEXP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    _active = _compiled
    BACKEND = "compiled"
else:
    _active = _purepy
    BACKEND = "python"

relation_candidates = _active.relation_candidates
min_vertex_expansion = _active.min_vertex_expansion
greedy_net = _active.greedy_net
