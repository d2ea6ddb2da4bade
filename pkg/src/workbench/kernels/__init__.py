"""Scoring kernels with a compiled fast path and a numpy fallback.

The compiled extension is preferred when the build produced one; set
WORKBENCH_KERNELS=python to force the numpy backend or
WORKBENCH_KERNELS=compiled to fail loudly when the extension is absent
(useful in benchmarks and CI).
"""

from __future__ import annotations

import os

from workbench.errors import ConfigError

__all__ = ["bm25_scores", "cosine_scores", "get_backend", "wmd_distance_pair"]

_requested = os.environ.get("WORKBENCH_KERNELS", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from workbench.kernels import _ckernels as _backend

        _BACKEND_NAME = "compiled"
    except ImportError:
        from workbench.kernels import pykernels as _backend

        _BACKEND_NAME = "python"
elif _requested == "compiled":
    try:
        from workbench.kernels import _ckernels as _backend
    except ImportError as exc:
        raise ConfigError(
            "WORKBENCH_KERNELS=compiled but the compiled extension is not "
            "available; reinstall with a C toolchain or unset the variable"
        ) from exc
    _BACKEND_NAME = "compiled"
elif _requested == "python":
    from workbench.kernels import pykernels as _backend

    _BACKEND_NAME = "python"
else:
    raise ConfigError(
        f"WORKBENCH_KERNELS must be 'auto', 'compiled', or 'python', "
        f"got {_requested!r}"
    )

bm25_scores = _backend.bm25_scores
cosine_scores = _backend.cosine_scores
wmd_distance_pair = _backend.wmd_distance_pair


def get_backend() -> str:
    """Name of the backend selected at import: 'compiled' or 'python'."""
    return _BACKEND_NAME
