"""Regular mapping with learnable decision boundaries.

Each axis keeps the fixed uniform level grid of a square QAM constellation
but learns where the decision boundaries sit: ``m - 1`` boundaries split
``[v_min, v_max]`` into ``m`` intervals and an input is emitted as the level
indexed by its interval. The hard decision (nearest boundary, then a strict
``>`` test whose step is 0 at 0) is what gets transmitted; derivatives come
from a smooth stand-in that replaces the nearest-boundary choice with a
distance softmax and the step with a sigmoid of sharpness ``delta``::

    w_j  = softmax_j(-delta * |x - d_j|)
    yb   = sum_j w_j c_j + sigmoid(delta * (x - sum_j w_j d_j)) * gap

where ``c_j`` is the j-th level and ``gap`` the constant level spacing.
"""

import dataclasses
import warnings

import numpy as np

from . import kernels
from .core import ComplexPoint, LevelSet, clip, make_uniform_levels
from .grad import DualResult, straight_through

DEFAULT_DELTA = 20.0


@dataclasses.dataclass(frozen=True, eq=False)
class BoundarySet:
    """Decision boundaries for one axis plus the softness used to train them.

    Boundaries are expected (not enforced) to stay sorted and interleaved
    with the levels; see :func:`check_interleaved`.
    """

    boundaries: np.ndarray
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        arr = np.array(self.boundaries, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("boundaries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "boundaries", arr)
        object.__setattr__(self, "delta", float(self.delta))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("need at least one boundary")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def m1(self) -> int:
        return int(self.boundaries.size)

    def __eq__(self, other):
        if not isinstance(other, BoundarySet):
            return NotImplemented
        return self.delta == other.delta and np.array_equal(self.boundaries, other.boundaries)


@dataclasses.dataclass(frozen=True, eq=False)
class MrcParams:
    """Per-axis boundary sets over one shared uniform level grid."""

    boundaries_re: BoundarySet
    boundaries_im: BoundarySet
    levels: LevelSet

    def __post_init__(self):
        for name, bset in (("re", self.boundaries_re), ("im", self.boundaries_im)):
            if bset.m1 != self.levels.m - 1:
                raise ValueError(
                    f"{name} axis needs {self.levels.m - 1} boundaries, got {bset.m1}"
                )
        if self.boundaries_re.delta != self.boundaries_im.delta:
            raise ValueError("both axes must share one delta")

    @property
    def delta(self) -> float:
        return self.boundaries_re.delta

    def __eq__(self, other):
        if not isinstance(other, MrcParams):
            return NotImplemented
        return (
            self.boundaries_re == other.boundaries_re
            and self.boundaries_im == other.boundaries_im
            and self.levels == other.levels
        )


def midpoint_boundaries(levels: LevelSet) -> np.ndarray:
    """Boundaries halfway between adjacent levels (the nearest-level rule)."""
    lv = levels.levels
    return (lv[:-1] + lv[1:]) / 2.0


def mrc_init(
    m: int = 4,
    v_min: float = None,
    v_max: float = None,
    delta: float = DEFAULT_DELTA,
) -> MrcParams:
    """Fresh parameters: uniform levels with midpoint boundaries on both axes."""
    kwargs = {}
    if v_min is not None:
        kwargs["v_min"] = v_min
    if v_max is not None:
        kwargs["v_max"] = v_max
    levels = make_uniform_levels(m, **kwargs)
    mids = midpoint_boundaries(levels)
    return MrcParams(BoundarySet(mids, delta), BoundarySet(mids.copy(), delta), levels)


def check_interleaved(params: MrcParams) -> bool:
    """True when both boundary sets are sorted and interleaved with the levels."""
    lv = params.levels.levels
    for bset in (params.boundaries_re, params.boundaries_im):
        d = bset.boundaries
        if np.any(np.diff(d) <= 0):
            return False
        if np.any(d <= lv[:-1]) or np.any(d >= lv[1:]):
            return False
    return True


def warn_if_deinterleaved(params: MrcParams, context: str = "") -> None:
    """Soft invariant check; mapping stays well defined either way."""
    if not check_interleaved(params):
        where = f" ({context})" if context else ""
        warnings.warn(
            f"boundaries are no longer sorted and interleaved with the levels{where}",
            stacklevel=2,
        )


def mrc_forward(x: float, bounds: BoundarySet, levels: LevelSet):
    """Hard decision for one already-clipped input; returns (level, interval index)."""
    y, idx = kernels.mrc_forward_block(np.array([x]), bounds.boundaries, levels.levels)
    return float(y[0]), int(idx[0])


def mrc_backward_value(x: float, bounds: BoundarySet, levels: LevelSet) -> float:
    yb = kernels.mrc_backward_value_block(
        np.array([x]), bounds.boundaries, levels.levels, bounds.delta
    )
    return float(yb[0])


def mrc_backward_grad(x: float, bounds: BoundarySet, levels: LevelSet) -> dict:
    """Partial derivatives of the backward value: keys ``"x"`` and ``"d[j]"``."""
    _, gx, gd = kernels.mrc_backward_grad_block(
        np.array([x]), bounds.boundaries, levels.levels, bounds.delta
    )
    table = {"x": float(gx[0])}
    for j in range(bounds.m1):
        table[f"d[{j}]"] = float(gd[0, j])
    return table


def mrc_forward_block(x, bounds: BoundarySet, levels: LevelSet):
    return kernels.mrc_forward_block(x, bounds.boundaries, levels.levels)


def mrc_backward_value_block(x, bounds: BoundarySet, levels: LevelSet):
    return kernels.mrc_backward_value_block(x, bounds.boundaries, levels.levels, bounds.delta)


def mrc_backward_grad_block(x, bounds: BoundarySet, levels: LevelSet):
    return kernels.mrc_backward_grad_block(x, bounds.boundaries, levels.levels, bounds.delta)


def mrc_map_point(p, params: MrcParams) -> DualResult:
    """Map one complex point; axes are independent.

    The input is clipped into the level range first; gradients w.r.t. a
    clipped-away component are 0. Gradient keys: ``p.re``, ``p.im``,
    ``d_re[j]``, ``d_im[j]``, each an ``(d out_re, d out_im)`` pair.
    """
    re, im = p
    lv = params.levels
    xr = clip(float(re), lv.v_min, lv.v_max)
    xi = clip(float(im), lv.v_min, lv.v_max)
    mask_r = 0.0 if (re < lv.v_min or re > lv.v_max) else 1.0
    mask_i = 0.0 if (im < lv.v_min or im > lv.v_max) else 1.0

    fr, _ = mrc_forward(xr, params.boundaries_re, lv)
    fi, _ = mrc_forward(xi, params.boundaries_im, lv)
    ybr, gxr, gdr = kernels.mrc_backward_grad_block(
        np.array([xr]), params.boundaries_re.boundaries, lv.levels, params.delta
    )
    ybi, gxi, gdi = kernels.mrc_backward_grad_block(
        np.array([xi]), params.boundaries_im.boundaries, lv.levels, params.delta
    )

    grads = {
        "p.re": np.array([float(gxr[0]) * mask_r, 0.0]),
        "p.im": np.array([0.0, float(gxi[0]) * mask_i]),
    }
    for j in range(params.boundaries_re.m1):
        grads[f"d_re[{j}]"] = np.array([float(gdr[0, j]), 0.0])
        grads[f"d_im[{j}]"] = np.array([0.0, float(gdi[0, j])])
    return straight_through(
        ComplexPoint(fr, fi), ComplexPoint(float(ybr[0]), float(ybi[0])), grads
    )
