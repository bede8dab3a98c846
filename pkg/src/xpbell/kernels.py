"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports cleanly; otherwise,
or when ``XPBELL_PURE_PYTHON`` is set to a non-empty value, the numpy
implementation in ``_pykernels`` is used. ``BACKEND`` names the active one.
"""

import os

from . import _pykernels

try:
    if os.environ.get("XPBELL_PURE_PYTHON"):
        raise ImportError("pure-python backend forced")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

mix64 = _impl.mix64
fill_uniform = _impl.fill_uniform
fill_normal = _impl.fill_normal
window_verdicts = _impl.window_verdicts
gaussian_window_verdicts = _impl.gaussian_window_verdicts
tally = _impl.tally
photogate_transit = _impl.photogate_transit


def available_backends():
    """Map backend name to module for every backend importable in this process."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
