"""Hot-kernel backend selection.

The compiled Cython extension is preferred; the pure numpy fallback is used
when the extension is missing or when ``HESSKIT_PURE`` is set (any non-empty
value) in the environment. ``BACKEND`` names the active implementation.
"""

import os

from . import _pure

if os.environ.get("HESSKIT_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _cyk as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

mamdani_centroid = _impl.mamdani_centroid
sg_fit_eval = _impl.sg_fit_eval
trapezoid_mu = _impl.trapezoid_mu

__all__ = ["BACKEND", "mamdani_centroid", "sg_fit_eval", "trapezoid_mu"]
