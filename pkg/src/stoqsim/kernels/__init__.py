"""Kernel backend selection.

The compiled extension is used when available; the pure-Python reference
implementation is the fallback.  STOQSIM_BACKEND=python|compiled forces a
backend (the latter raises if the extension is missing).  Both backends
consume random streams identically, so results do not depend on the choice.
"""

import os

_forced = os.environ.get("STOQSIM_BACKEND", "auto").strip().lower()

if _forced in ("auto", "", "compiled"):
    try:
        from stoqsim import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        from stoqsim.kernels import pyref as _impl

        BACKEND = "python"
elif _forced == "python":
    from stoqsim.kernels import pyref as _impl

    BACKEND = "python"
else:
    raise ValueError(f"STOQSIM_BACKEND must be auto|python|compiled, got {_forced!r}")

walk_trajectories = _impl.walk_trajectories
walk_verdicts = _impl.walk_verdicts
sw_sweeps = _impl.sw_sweeps
anneal_pass = _impl.anneal_pass
gray_log_partition = _impl.gray_log_partition
