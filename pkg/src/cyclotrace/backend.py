"""Kernel selection: compiled extension if importable, else pure python.

Set CYCLOTRACE_PURE_PYTHON=1 to force the fallback (used by the test suite
and the backend benchmark to compare the two implementations).
"""

import os

if os.environ.get("CYCLOTRACE_PURE_PYTHON") == "1":
    from . import _kernel_py as _impl
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernel_py as _impl

BACKEND_NAME = _impl.BACKEND_NAME
f_chain_packed = _impl.f_chain_packed
plan_rows_single = _impl.plan_rows_single
plan_batch_rows = _impl.plan_batch_rows
