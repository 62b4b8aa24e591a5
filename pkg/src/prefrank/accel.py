"""Select the compiled kernel extension when built, else the pure fallback.

Set PREFRANK_PURE=1 to force the fallback (used by the parity tests and the
kernel benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("PREFRANK_PURE") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

USING_COMPILED = kernels.__name__.endswith("._kernels")

__all__ = ["kernels", "USING_COMPILED"]
