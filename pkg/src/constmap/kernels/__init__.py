"""Block mapping kernels with a compiled fast path.

The Cython backend is used when the extension was built; the NumPy fallback
is selected otherwise. Set ``CONSTMAP_KERNELS=python`` to force the fallback
or ``CONSTMAP_KERNELS=cython`` to fail loudly when the extension is missing.
Both backends implement the contract documented in ``_numpy.py``.
"""

import os

import numpy as np

from . import _numpy as _py

_requested = os.environ.get("CONSTMAP_KERNELS", "auto").lower()
if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"unknown CONSTMAP_KERNELS value: {_requested!r}")

_cy = None
if _requested in ("auto", "cython"):
    try:
        from . import _cython as _cy  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "CONSTMAP_KERNELS=cython but the compiled kernel extension is not available"
            ) from None

_impl = _cy if _cy is not None else _py


def backend() -> str:
    """Name of the active kernel backend: 'cython' or 'python'."""
    return "python" if _impl is _py else "cython"


def implementations() -> dict:
    """Available backend modules by name (used by parity tests and benchmarks)."""
    impls = {"python": _py}
    if _cy is not None:
        impls["cython"] = _cy
    return impls


def _vec(a, name):
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    return out


def _check_mrc(x, d, levels):
    x = _vec(x, "x")
    d = _vec(d, "d")
    levels = _vec(levels, "levels")
    if d.shape[0] < 1:
        raise ValueError("need at least one boundary")
    if levels.shape[0] != d.shape[0] + 1:
        raise ValueError(
            f"levels must have len(d) + 1 entries, got {levels.shape[0]} for {d.shape[0]} boundaries"
        )
    return x, d, levels


def _check_mic(pre, pim, cre, cim):
    pre = _vec(pre, "pre")
    pim = _vec(pim, "pim")
    cre = _vec(cre, "cre")
    cim = _vec(cim, "cim")
    if pre.shape[0] != pim.shape[0]:
        raise ValueError("pre and pim must have equal length")
    if cre.shape[0] != cim.shape[0]:
        raise ValueError("cre and cim must have equal length")
    if cre.shape[0] < 1:
        raise ValueError("constellation must not be empty")
    return pre, pim, cre, cim


def _check_delta(delta):
    delta = float(delta)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return delta


def mrc_forward_block(x, d, levels):
    x, d, levels = _check_mrc(x, d, levels)
    return _impl.mrc_forward_block(x, d, levels)


def mrc_backward_value_block(x, d, levels, delta):
    x, d, levels = _check_mrc(x, d, levels)
    return _impl.mrc_backward_value_block(x, d, levels, _check_delta(delta))


def mrc_backward_grad_block(x, d, levels, delta):
    x, d, levels = _check_mrc(x, d, levels)
    return _impl.mrc_backward_grad_block(x, d, levels, _check_delta(delta))


def mic_forward_block(pre, pim, cre, cim):
    pre, pim, cre, cim = _check_mic(pre, pim, cre, cim)
    return _impl.mic_forward_block(pre, pim, cre, cim)


def mic_backward_value_block(pre, pim, cre, cim, delta):
    pre, pim, cre, cim = _check_mic(pre, pim, cre, cim)
    return _impl.mic_backward_value_block(pre, pim, cre, cim, _check_delta(delta))


def mic_backward_grad_block(pre, pim, cre, cim, delta):
    pre, pim, cre, cim = _check_mic(pre, pim, cre, cim)
    return _impl.mic_backward_grad_block(pre, pim, cre, cim, _check_delta(delta))
