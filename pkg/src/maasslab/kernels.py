"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  Setting ``MAASSLAB_PURE_PYTHON=1`` forces the fallback,
which is how the benchmark and the backend-agreement tests reach it.
"""

from __future__ import annotations

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)


def _load():
    if os.environ.get("MAASSLAB_PURE_PYTHON", "") not in ("", "0"):
        return _pykernels
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        log.debug("compiled kernels unavailable; using numpy fallback")
        return _pykernels
    return _ckernels


_impl = _load()
BACKEND: str = _impl.BACKEND
kloosterman_many = _impl.kloosterman_many
osc_sum = _impl.osc_sum

__all__ = ["BACKEND", "kloosterman_many", "osc_sum"]
