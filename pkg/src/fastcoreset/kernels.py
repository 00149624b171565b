"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used. Set ``FASTCORESET_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("FASTCORESET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

assign_sq = _impl.assign_sq
count_cells = _impl.count_cells
block_sums = _impl.block_sums
tree_draw = _impl.tree_draw
tree_insert = _impl.tree_insert
tree_propose = _impl.tree_propose


def get(name, backend=None):
    """Fetch kernel ``name`` from a specific backend (``"python"``/``"cython"``)."""
    if backend is None:
        return getattr(_impl, name)
    if backend == "python":
        return getattr(_pykernels, name)
    if backend == "cython":
        from . import _ckernels

        return getattr(_ckernels, name)
    raise ValueError(f"unknown backend {backend!r}")
