"""Backend selection for the hot finite-difference kernels.

Numba is used when importable unless the environment variable
NGHJB_DISABLE_NUMBA is set to a truthy value, in which case the vectorized
pure-numpy path runs instead.  Both paths implement identical arithmetic.
"""

from __future__ import annotations

import os

DISABLE_FLAG = "NGHJB_DISABLE_NUMBA"

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(DISABLE_FLAG, "0").lower() not in (
    "1",
    "true",
    "yes",
)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
