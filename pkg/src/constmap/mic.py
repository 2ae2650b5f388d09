"""Irregular mapping with learnable constellation points.

The constellation is a free set of complex points; an input maps to its
nearest point (Euclidean distance, ties to the lowest canonical index).
Derivatives come from a smooth stand-in that replaces the hard assignment
with a distance softmax of sharpness ``delta``::

    w_j = softmax_j(-delta * |p - c_j|)
    yb  = sum_j w_j c_j

Points start on a square QAM grid and move freely during training; they are
not constrained to the clip box afterwards.
"""

import dataclasses

import numpy as np

from . import kernels
from .core import ComplexPoint, Constellation, LevelSet, clip, make_qam_grid
from .grad import DualResult, straight_through

DEFAULT_DELTA = 20.0


@dataclasses.dataclass(frozen=True, eq=False)
class MicParams:
    """Learnable point set plus the softness used to train it."""

    constellation: Constellation
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def n(self) -> int:
        return self.constellation.n

    def __eq__(self, other):
        if not isinstance(other, MicParams):
            return NotImplemented
        return self.delta == other.delta and self.constellation == other.constellation


def mic_from_qam(levels_re: LevelSet, levels_im: LevelSet, delta: float = DEFAULT_DELTA) -> MicParams:
    """Initial point set: the square grid in canonical order."""
    return MicParams(make_qam_grid(levels_re, levels_im), delta)


def _split(params: MicParams):
    pts = params.constellation.points
    return np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])


def mic_forward(p, params: MicParams):
    """Nearest constellation point; returns (point, index)."""
    re, im = p
    cre, cim = _split(params)
    yre, yim, idx = kernels.mic_forward_block(np.array([re]), np.array([im]), cre, cim)
    return ComplexPoint(float(yre[0]), float(yim[0])), int(idx[0])


def mic_backward_value(p, params: MicParams) -> ComplexPoint:
    re, im = p
    cre, cim = _split(params)
    bre, bim = kernels.mic_backward_value_block(
        np.array([re]), np.array([im]), cre, cim, params.delta
    )
    return ComplexPoint(float(bre[0]), float(bim[0]))


def mic_backward_grad(p, params: MicParams) -> dict:
    """Partials of the backward value: keys ``p.re``, ``p.im``, ``c[j].re``,
    ``c[j].im``; each value is an ``(d out_re, d out_im)`` pair."""
    re, im = p
    cre, cim = _split(params)
    _, _, jp, jc = kernels.mic_backward_grad_block(
        np.array([re]), np.array([im]), cre, cim, params.delta
    )
    table = {
        "p.re": np.array([jp[0, 0, 0], jp[0, 1, 0]]),
        "p.im": np.array([jp[0, 0, 1], jp[0, 1, 1]]),
    }
    for j in range(params.n):
        table[f"c[{j}].re"] = np.array([jc[0, 0, j, 0], jc[0, 1, j, 0]])
        table[f"c[{j}].im"] = np.array([jc[0, 0, j, 1], jc[0, 1, j, 1]])
    return table


def soft_weights(p, params: MicParams) -> np.ndarray:
    """The softmax assignment weights over the points (non-negative, sum 1)."""
    re, im = p
    cre, cim = _split(params)
    dist = np.hypot(re - cre, im - cim)
    a = -params.delta * dist
    a -= a.max()
    e = np.exp(a)
    return e / e.sum()


def mic_forward_block(pre, pim, params: MicParams):
    cre, cim = _split(params)
    return kernels.mic_forward_block(pre, pim, cre, cim)


def mic_backward_value_block(pre, pim, params: MicParams):
    cre, cim = _split(params)
    return kernels.mic_backward_value_block(pre, pim, cre, cim, params.delta)


def mic_backward_grad_block(pre, pim, params: MicParams):
    cre, cim = _split(params)
    return kernels.mic_backward_grad_block(pre, pim, cre, cim, params.delta)


def mic_map_point(p, params: MicParams, v_min: float = -2.0, v_max: float = 2.0) -> DualResult:
    """Map one complex point, clipping the input into the box first.

    Gradients w.r.t. a clipped-away input component are 0.
    """
    re, im = p
    xr = clip(float(re), v_min, v_max)
    xi = clip(float(im), v_min, v_max)
    mask_r = 0.0 if (re < v_min or re > v_max) else 1.0
    mask_i = 0.0 if (im < v_min or im > v_max) else 1.0

    hard, _ = mic_forward((xr, xi), params)
    cre, cim = _split(params)
    bre, bim, jp, jc = kernels.mic_backward_grad_block(
        np.array([xr]), np.array([xi]), cre, cim, params.delta
    )
    grads = {
        "p.re": np.array([jp[0, 0, 0], jp[0, 1, 0]]) * mask_r,
        "p.im": np.array([jp[0, 0, 1], jp[0, 1, 1]]) * mask_i,
    }
    for j in range(params.n):
        grads[f"c[{j}].re"] = np.array([jc[0, 0, j, 0], jc[0, 1, j, 0]])
        grads[f"c[{j}].im"] = np.array([jc[0, 0, j, 1], jc[0, 1, j, 1]])
    return straight_through(hard, ComplexPoint(float(bre[0]), float(bim[0])), grads)
