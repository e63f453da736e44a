"""Kernel backend selection.

The compiled extension (``_core``) and the numpy fallback (``_fallback``)
are bit-identical by construction; the compiled one is simply faster.  Set
``ATEBENCH_FORCE_NUMPY=1`` to skip the extension, e.g. to benchmark the
fallback or to rule the extension out when debugging.
"""

import os

if os.environ.get("ATEBENCH_FORCE_NUMPY", "") not in ("", "0"):
    from . import _fallback as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as _impl

BACKEND = _impl.BACKEND_NAME
CHAIN_OK = _impl.CHAIN_OK
CHAIN_UNBOUNDED = _impl.CHAIN_UNBOUNDED
CHORD_UNDERFLOW = _impl.CHORD_UNDERFLOW
run_chain = _impl.run_chain
build_tree = _impl.build_tree

from ._fallback import colwise_matvec

__all__ = [
    "BACKEND",
    "CHAIN_OK",
    "CHAIN_UNBOUNDED",
    "CHORD_UNDERFLOW",
    "run_chain",
    "build_tree",
    "colwise_matvec",
]
