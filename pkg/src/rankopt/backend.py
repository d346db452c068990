"""Kernel backend selection.

The compiled extension is preferred when importable; ``RANKOPT_PURE_PYTHON=1``
forces the numpy fallback.  Both expose the same functions with identical
semantics (see ``_fallback`` for the reference definitions).
"""

import os

from . import _fallback

if os.environ.get("RANKOPT_PURE_PYTHON") == "1":
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _fallback


def backend_name() -> str:
    return kernels.NAME


def available_backends():
    out = [_fallback]
    try:
        from . import _kernels

        out.insert(0, _kernels)
    except ImportError:
        pass
    return out
