"""Select the compiled stencil kernels when available, numpy otherwise.

Set ``NLSKT_BACKEND=python`` to force the numpy fallback.
"""
import logging
import os

from nlskt import _fallback

log = logging.getLogger(__name__)

_impl = _fallback
BACKEND = "python"

if os.environ.get("NLSKT_BACKEND", "").lower() != "python":
    try:
        from nlskt import _core as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        log.debug("nlskt._core unavailable, using numpy fallback")
        _impl = _fallback

stencil_sum = _impl.stencil_sum
pair_energy = _impl.pair_energy
bilateral_rhs = _impl.bilateral_rhs


def implementations():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _fallback}
    try:
        from nlskt import _core
        found["cython"] = _core
    except ImportError:
        pass
    return found
