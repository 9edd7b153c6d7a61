"""Backend selection for the inner-loop kernels.

The compiled extension is used when importable; set ``RICLINK_PURE=1`` to
force the numpy fallback. Both backends return identical results.
"""

import os

from riclink import _pykernels

python_backend = _pykernels

if os.environ.get("RICLINK_PURE", "") not in ("", "0"):
    compiled_backend = None
else:
    try:
        from riclink import _ext as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend or python_backend
BACKEND = active.BACKEND

mrc_combine = active.mrc_combine
detect_nearest = active.detect_nearest
mrc_detect = active.mrc_detect
count_errors = active.count_errors


def available_backends():
    return [b for b in (compiled_backend, python_backend) if b is not None]
