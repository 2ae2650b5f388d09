"""Straight-through gluing and a finite-difference gradient checker.

A mapping op evaluates two expressions at the same input: the hard forward
value that is actually transmitted, and a smooth backward stand-in that
supplies every derivative. ``DualResult`` carries both plus the gradient
table of the backward expression; optimizers read ``value`` going forward
and the table going backward, which is the usual
``stopgradient(forward - backward) + backward`` construction.
"""

import dataclasses

import numpy as np

from .core import ComplexPoint
from .errors import ShapeMismatchError


@dataclasses.dataclass(frozen=True)
class DualResult:
    """Hard value, smooth stand-in value, and the stand-in's gradient table.

    ``grads`` maps a parameter identifier (e.g. ``"x"``, ``"d[2]"``,
    ``"c[5].re"``) to the partial derivative of the backward expression:
    a float for scalar-valued ops, an ``(d_re, d_im)`` array for
    complex-valued ops.
    """

    value: object
    backward_value: object
    grads: dict


def _shape_of(v):
    if isinstance(v, ComplexPoint):
        return ("complex",)
    if np.ndim(v) == 0:
        return ("scalar",)
    return ("array", np.shape(v))


def straight_through(forward, backward, grads: dict) -> DualResult:
    """Combine a hard forward value with its smooth backward stand-in."""
    if _shape_of(forward) != _shape_of(backward):
        raise ShapeMismatchError(
            f"forward/backward shapes differ: {_shape_of(forward)} vs {_shape_of(backward)}"
        )
    return DualResult(forward, backward, dict(grads))


def finite_difference_check(f, at, analytic, h: float = 1e-5) -> np.ndarray:
    """Relative error of analytic gradients against central differences.

    ``f`` takes a parameter list and returns a scalar; it may compute in any
    numeric type (plain floats, or an extended-precision type such as
    ``mpmath.mpf`` when float64 differencing would drown tiny partials in
    rounding noise). The subtraction runs in that same type. The error for
    parameter ``i`` is ``|num - analytic| / max(|analytic|, |num|, 1e-8)``.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    at = [float(v) for v in at]
    analytic = [float(g) for g in analytic]
    if len(at) != len(analytic):
        raise ValueError("analytic gradient length must match parameter count")
    errs = np.empty(len(at))
    for i in range(len(at)):
        up = list(at)
        up[i] = at[i] + h
        down = list(at)
        down[i] = at[i] - h
        num = (f(up) - f(down)) / (2.0 * h)
        denom = max(abs(analytic[i]), abs(num), 1e-8)
        errs[i] = float(abs(num - analytic[i]) / denom)
    return errs
