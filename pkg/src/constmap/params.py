"""Mapping parameter union: serialization, dispatch and flat-vector packing.

Three mapping families share one interface: the fixed nearest-level grid
(``qam``), learnable boundaries over a fixed grid (``mrc``) and learnable
points (``mic``). JSON schemas (stable, documented in the README):

* ``{"type": "qam", "levels": {...}}``
* ``{"type": "mrc", "levels": {...}, "d_re": [...], "d_im": [...], "delta": 20.0}``
* ``{"type": "mic", "points": [[re, im], ...], "delta": 20.0}``

where ``levels`` is ``{"type": "levels", "values": [...], "v_min": ..., "v_max": ...}``.
Floats round-trip bit for bit through JSON.
"""

import dataclasses
import json
from typing import Union

import numpy as np

from .core import (
    ComplexPoint,
    Constellation,
    LevelSet,
    levelset_from_json_dict,
    levelset_to_json_dict,
    make_qam_grid,
    qam_map,
    qam_map_block,
)
from .errors import SchemaError
from .mic import MicParams, mic_forward, mic_forward_block
from .mrc import BoundarySet, MrcParams, mrc_forward
from . import kernels, mrc as _mrc_mod


@dataclasses.dataclass(frozen=True, eq=False)
class QamParams:
    """Plain nearest-level grid mapping; one level set shared by both axes."""

    levels: LevelSet

    def __eq__(self, other):
        if not isinstance(other, QamParams):
            return NotImplemented
        return self.levels == other.levels


MappingParams = Union[QamParams, MrcParams, MicParams]


# ---------------------------------------------------------------------------
# JSON schema helpers (field-naming validators shared with core and config).

def _expect_mapping(obj, ctx):
    if not isinstance(obj, dict):
        raise SchemaError(f"{ctx}: expected object, got {type(obj).__name__}")


def _number(v, ctx):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{ctx}: expected number, got {type(v).__name__}")
    return float(v)


def _number_list(v, ctx):
    if not isinstance(v, list):
        raise SchemaError(f"{ctx}: expected array, got {type(v).__name__}")
    return [_number(item, f"{ctx}[{i}]") for i, item in enumerate(v)]


def _point_list(v, ctx):
    if not isinstance(v, list):
        raise SchemaError(f"{ctx}: expected array, got {type(v).__name__}")
    out = []
    for i, item in enumerate(v):
        if not isinstance(item, list) or len(item) != 2:
            raise SchemaError(f"{ctx}[{i}]: expected [re, im] pair")
        out.append([_number(item[0], f"{ctx}[{i}][0]"), _number(item[1], f"{ctx}[{i}][1]")])
    return out


def to_json_dict(params: MappingParams) -> dict:
    if isinstance(params, QamParams):
        return {"type": "qam", "levels": levelset_to_json_dict(params.levels)}
    if isinstance(params, MrcParams):
        return {
            "type": "mrc",
            "levels": levelset_to_json_dict(params.levels),
            "d_re": [float(v) for v in params.boundaries_re.boundaries],
            "d_im": [float(v) for v in params.boundaries_im.boundaries],
            "delta": params.delta,
        }
    if isinstance(params, MicParams):
        return {
            "type": "mic",
            "points": [[float(a), float(b)] for a, b in params.constellation.points],
            "delta": params.delta,
        }
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


def from_json_dict(obj, ctx: str = "params") -> MappingParams:
    _expect_mapping(obj, ctx)
    kind = obj.get("type")
    if kind == "qam":
        return QamParams(levelset_from_json_dict(obj.get("levels"), f"{ctx}.levels"))
    if kind == "mrc":
        levels = levelset_from_json_dict(obj.get("levels"), f"{ctx}.levels")
        d_re = _number_list(obj.get("d_re"), f"{ctx}.d_re")
        d_im = _number_list(obj.get("d_im"), f"{ctx}.d_im")
        delta = _number(obj.get("delta"), f"{ctx}.delta")
        for name, d in (("d_re", d_re), ("d_im", d_im)):
            if len(d) != levels.m - 1:
                raise SchemaError(
                    f"{ctx}.{name}: expected {levels.m - 1} boundaries, got {len(d)}"
                )
        try:
            return MrcParams(
                BoundarySet(np.array(d_re), delta), BoundarySet(np.array(d_im), delta), levels
            )
        except ValueError as exc:
            raise SchemaError(f"{ctx}: {exc}") from exc
    if kind == "mic":
        points = _point_list(obj.get("points"), f"{ctx}.points")
        delta = _number(obj.get("delta"), f"{ctx}.delta")
        try:
            return MicParams(Constellation(np.array(points).reshape(-1, 2)), delta)
        except ValueError as exc:
            raise SchemaError(f"{ctx}: {exc}") from exc
    raise SchemaError(f"{ctx}.type: expected one of qam/mrc/mic, got {kind!r}")


def save_params(path, params: MappingParams) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_json_dict(params), fh, indent=2)
        fh.write("\n")


def load_params(path) -> MappingParams:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"params: not valid JSON ({exc})") from exc
    return from_json_dict(obj)


# ---------------------------------------------------------------------------
# Uniform dispatch over the union.

def clip_range(params) -> tuple:
    """The clip box for inputs of the given mapping."""
    if params is None:
        return (-2.0, 2.0)
    if isinstance(params, (QamParams, MrcParams)):
        return (params.levels.v_min, params.levels.v_max)
    if isinstance(params, MicParams):
        return (-2.0, 2.0)
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


def map_point(params: MappingParams, p) -> tuple:
    """Hard-map one complex point; returns (point, canonical cluster index)."""
    if isinstance(params, QamParams):
        out = qam_map(p, params.levels, params.levels)
        _, _, idx = qam_map_block(
            np.array([p[0]]), np.array([p[1]]), params.levels, params.levels
        )
        return out, int(idx[0])
    if isinstance(params, MrcParams):
        re, im = p
        lv = params.levels
        xr = np.clip(float(re), lv.v_min, lv.v_max)
        xi = np.clip(float(im), lv.v_min, lv.v_max)
        yr, kr = mrc_forward(float(xr), params.boundaries_re, lv)
        yi, ki = mrc_forward(float(xi), params.boundaries_im, lv)
        return ComplexPoint(yr, yi), ki * lv.m + kr
    if isinstance(params, MicParams):
        re, im = p
        xr = np.clip(float(re), -2.0, 2.0)
        xi = np.clip(float(im), -2.0, 2.0)
        return mic_forward((float(xr), float(xi)), params)
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


def map_block(params: MappingParams, pre, pim):
    """Hard-map a block of complex points; returns (yre, yim, cluster index).

    Inputs are clipped into the mapping's box first. Cluster indices follow
    the canonical constellation order.
    """
    v_min, v_max = clip_range(params)
    pre = np.clip(np.asarray(pre, dtype=np.float64), v_min, v_max)
    pim = np.clip(np.asarray(pim, dtype=np.float64), v_min, v_max)
    if isinstance(params, QamParams):
        return qam_map_block(pre, pim, params.levels, params.levels)
    if isinstance(params, MrcParams):
        lv = params.levels
        yre, kre = kernels.mrc_forward_block(pre, params.boundaries_re.boundaries, lv.levels)
        yim, kim = kernels.mrc_forward_block(pim, params.boundaries_im.boundaries, lv.levels)
        return yre, yim, kim * lv.m + kre
    if isinstance(params, MicParams):
        return mic_forward_block(pre, pim, params)
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


def constellation_of(params: MappingParams) -> Constellation:
    """The finite point set the mapping transmits, in canonical order."""
    if isinstance(params, (QamParams, MrcParams)):
        return make_qam_grid(params.levels, params.levels)
    if isinstance(params, MicParams):
        return params.constellation
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


# ---------------------------------------------------------------------------
# Flat parameter vectors for the optimizer.

def params_vector(params: MappingParams) -> np.ndarray:
    """Trainable parameters as one flat float64 vector.

    Layout: ``mrc`` is ``[d_re..., d_im...]``; ``mic`` is the point array
    raveled row-major (re, im per point); ``qam`` has no trainable part.
    """
    if params is None or isinstance(params, QamParams):
        return np.zeros(0)
    if isinstance(params, MrcParams):
        return np.concatenate(
            [params.boundaries_re.boundaries, params.boundaries_im.boundaries]
        )
    if isinstance(params, MicParams):
        return params.constellation.points.ravel().copy()
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


def replace_params_vector(params: MappingParams, vec: np.ndarray) -> MappingParams:
    """Rebuild a mapping from an updated flat vector (inverse of params_vector)."""
    vec = np.asarray(vec, dtype=np.float64)
    if params is None or isinstance(params, QamParams):
        if vec.size != 0:
            raise ValueError("this mapping has no trainable parameters")
        return params
    if isinstance(params, MrcParams):
        m1 = params.boundaries_re.m1
        if vec.size != 2 * m1:
            raise ValueError(f"expected {2 * m1} values, got {vec.size}")
        return MrcParams(
            BoundarySet(vec[:m1], params.delta),
            BoundarySet(vec[m1:], params.delta),
            params.levels,
        )
    if isinstance(params, MicParams):
        if vec.size != 2 * params.n:
            raise ValueError(f"expected {2 * params.n} values, got {vec.size}")
        return MicParams(Constellation(vec.reshape(-1, 2)), params.delta)
    raise TypeError(f"not a mapping parameter object: {type(params).__name__}")


def with_delta(params: MappingParams, delta: float) -> MappingParams:
    """Same mapping with a different softness (no effect on qam)."""
    if isinstance(params, MrcParams):
        return MrcParams(
            BoundarySet(params.boundaries_re.boundaries, delta),
            BoundarySet(params.boundaries_im.boundaries, delta),
            params.levels,
        )
    if isinstance(params, MicParams):
        return MicParams(params.constellation, delta)
    return params


def warn_if_deinterleaved(params, context: str = "") -> None:
    if isinstance(params, MrcParams):
        _mrc_mod.warn_if_deinterleaved(params, context)
