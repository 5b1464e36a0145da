"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``CONFIDYN_PURE_PYTHON=1``
to force the NumPy fallback.
"""

import os

from confidyn import _pykernels

if os.environ.get("CONFIDYN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from confidyn import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
sup_distance = _impl.sup_distance
step_padded = _impl.step_padded
run_schedule = _impl.run_schedule
sample_neighbors = _impl.sample_neighbors
run_random = _impl.run_random

python_backend = _pykernels
