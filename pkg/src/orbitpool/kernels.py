"""Backend selection for the resampling kernels.

The compiled extension is used when importable; set ``ORBITPOOL_PURE_PYTHON=1``
to force the numpy fallback.  Both expose ``warp_affine`` and
``correlate_axis`` with identical semantics.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("ORBITPOOL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"``/``"python"``) or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def warp_affine(src, coeffs, order):
    return _impl.warp_affine(src, coeffs, order)


def correlate_axis(src, offsets, weights, axis):
    return _impl.correlate_axis(src, offsets, weights, axis)
