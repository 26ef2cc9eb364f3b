"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension (``_ckern``, Cython) is preferred when present;
otherwise ``_pykern`` backs the same interface. Set ``REFLAB_KERNELS`` to
``python`` or ``cython`` to force a backend (``cython`` raises if the
extension was not built). ``benchmarks/bench_kernels.py`` compares both.
"""

from __future__ import annotations

import os

_requested = os.environ.get("REFLAB_KERNELS", "auto")

if _requested not in ("auto", "python", "cython"):
    raise ValueError(f"REFLAB_KERNELS must be auto|python|cython, got {_requested!r}")

if _requested == "python":
    from . import _pykern as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _pykern as _impl  # type: ignore[no-redef]

        BACKEND = "python"

lstm_gates_forward = _impl.lstm_gates_forward
lstm_gates_backward = _impl.lstm_gates_backward
softmax_last = _impl.softmax_last
softmax_last_backward = _impl.softmax_last_backward
log_softmax_last = _impl.log_softmax_last
log_softmax_last_backward = _impl.log_softmax_last_backward
adam_update = _impl.adam_update
