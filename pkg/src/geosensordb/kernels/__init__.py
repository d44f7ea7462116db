"""Hot cell-scan kernels with a compiled core and a numpy fallback.

The compiled extension is optional: if it failed to build (or
``GEOSENSORDB_KERNELS=python`` is set) the numpy implementations are used
instead.  Both lanes share the same signatures and are compared by
``benchmarks/bench_kernels.py`` and the test suite.
"""

import os

from . import _pykernels

_requested = os.environ.get("GEOSENSORDB_KERNELS", "auto")

if _requested == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "c":
            raise
        _impl = _pykernels

BACKEND = "c" if _impl is not _pykernels else "python"

tile_stats = _impl.tile_stats
buffer_weighted_sum = _impl.buffer_weighted_sum
