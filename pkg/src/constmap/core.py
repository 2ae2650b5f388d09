"""Constellation primitives.

Finite constellations are built from per-axis level grids: ``m`` uniformly
spaced quantization levels spanning ``[v_min, v_max]`` on the real and the
imaginary axis, combined through a Cartesian product. This module owns those
types plus the small block operations every pipeline stage shares: clipping,
real/complex pairing and transmit power normalization.

Canonical constellation order
-----------------------------
Grid points are indexed row-major with the imaginary level as the slow
(outer) index and the real level as the fast (inner) index::

    index(k_re, k_im) = k_im * m_re + k_re

Every nearest-something decision downstream breaks ties toward the lowest
index under this order, which per axis means the smaller level.
"""

import dataclasses
import json
import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, SchemaError

DEFAULT_V_MIN = -2.0
DEFAULT_V_MAX = 2.0


class ComplexPoint(NamedTuple):
    """A complex value stored as an explicit (re, im) pair."""

    re: float
    im: float


def _frozen_array(values, shape_hint: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{shape_hint} must be finite")
    arr.setflags(write=False)
    return arr


def clip(x, v_min: float = DEFAULT_V_MIN, v_max: float = DEFAULT_V_MAX):
    """Saturate ``x`` (scalar or array) into ``[v_min, v_max]``."""
    if not v_min < v_max:
        raise ValueError(f"need v_min < v_max, got [{v_min}, {v_max}]")
    out = np.clip(x, v_min, v_max)
    if np.ndim(x) == 0:
        return float(out)
    return np.asarray(out, dtype=np.float64)


@dataclasses.dataclass(frozen=True, eq=False)
class LevelSet:
    """Strictly increasing, uniformly spaced levels with exact endpoints.

    The first level equals ``v_min`` and the last equals ``v_max`` bit for
    bit; interior spacing may deviate from ``spacing`` by rounding only.
    """

    levels: np.ndarray
    v_min: float
    v_max: float

    def __post_init__(self):
        object.__setattr__(self, "v_min", float(self.v_min))
        object.__setattr__(self, "v_max", float(self.v_max))
        arr = _frozen_array(self.levels, "levels")
        object.__setattr__(self, "levels", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("need a 1-D set of at least two levels")
        if not self.v_min < self.v_max:
            raise ValueError(f"need v_min < v_max, got [{self.v_min}, {self.v_max}]")
        if arr[0] != self.v_min or arr[-1] != self.v_max:
            raise ValueError("levels must span [v_min, v_max] exactly")
        steps = np.diff(arr)
        if np.any(steps <= 0):
            raise ValueError("levels must be strictly increasing")
        if np.max(np.abs(steps - self.spacing)) > 1e-12 * (self.v_max - self.v_min):
            raise ValueError("levels must be uniformly spaced")

    @property
    def m(self) -> int:
        return int(self.levels.size)

    @property
    def spacing(self) -> float:
        return (self.v_max - self.v_min) / (self.levels.size - 1)

    def __eq__(self, other):
        if not isinstance(other, LevelSet):
            return NotImplemented
        return (
            self.v_min == other.v_min
            and self.v_max == other.v_max
            and np.array_equal(self.levels, other.levels)
        )


def make_uniform_levels(
    m: int, v_min: float = DEFAULT_V_MIN, v_max: float = DEFAULT_V_MAX
) -> LevelSet:
    """Uniform quantization grid for one axis.

    Level ``i`` sits at ``v_min + i * (v_max - v_min) / (m - 1)``. Interior
    levels are evaluated in the convex-combination form so a symmetric range
    yields bit-symmetric levels (exact distance ties at the center), and both
    endpoints are set exactly.
    """
    if m < 2:
        raise ValueError(f"need at least 2 levels, got {m}")
    if not v_min < v_max:
        raise ValueError(f"need v_min < v_max, got [{v_min}, {v_max}]")
    i = np.arange(m, dtype=np.float64)
    levels = (v_min * (m - 1 - i) + v_max * i) / (m - 1)
    levels[0] = v_min
    levels[-1] = v_max
    return LevelSet(levels, v_min, v_max)


@dataclasses.dataclass(frozen=True, eq=False)
class Constellation:
    """Ordered finite point set, stored as an ``(n, 2)`` array of (re, im) rows."""

    points: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.points, "points")
        object.__setattr__(self, "points", arr)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("constellation needs at least one point")

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    def point(self, i: int) -> ComplexPoint:
        return ComplexPoint(float(self.points[i, 0]), float(self.points[i, 1]))

    def __eq__(self, other):
        if not isinstance(other, Constellation):
            return NotImplemented
        return np.array_equal(self.points, other.points)


def make_qam_grid(levels_re: LevelSet, levels_im: LevelSet) -> Constellation:
    """Cartesian product grid in canonical order (imaginary outer, real inner)."""
    re = np.tile(levels_re.levels, levels_im.m)
    im = np.repeat(levels_im.levels, levels_re.m)
    return Constellation(np.column_stack([re, im]))


def pair_to_complex(block) -> np.ndarray:
    """Fold a flat, even-length block of reals into (re, im) rows.

    Consecutive pairs become one point: ``[1, 2, 3, 4] -> [[1, 2], [3, 4]]``.
    """
    x = np.asarray(block, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("block must be 1-D")
    if x.size % 2:
        raise ValueError(f"block length must be even, got {x.size}")
    return x.reshape(-1, 2).copy()


def complex_to_pair(points) -> np.ndarray:
    """Inverse of :func:`pair_to_complex`; flattens (re, im) rows back to reals."""
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2 or (p.size and p.shape[1] != 2):
        raise ValueError("points must have shape (n, 2)")
    return p.reshape(-1).copy()


def power_normalize(block, power: float = 1.0):
    """Scale a block so its mean square power equals ``power``.

    Returns ``(scaled block, scale)`` where ``scale = sqrt(power * B / sum(x^2))``
    is the multiplier that was applied; a receiver undoes it by dividing.
    """
    x = np.asarray(block, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("block must be 1-D")
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    energy = float(np.dot(x, x))
    if energy == 0.0:
        raise DegenerateInputError("cannot power-normalize an all-zero block")
    scale = math.sqrt(power * x.size / energy)
    return x * scale, scale


def _nearest_level_block(x, levels: LevelSet, chunk: int = 1 << 15) -> np.ndarray:
    """Index of the nearest level per entry, after clipping; ties take the lower level."""
    xc = np.clip(np.asarray(x, dtype=np.float64), levels.v_min, levels.v_max)
    out = np.empty(xc.size, dtype=np.int64)
    for lo in range(0, xc.size, chunk):
        seg = xc[lo : lo + chunk]
        out[lo : lo + chunk] = np.argmin(np.abs(seg[:, None] - levels.levels[None, :]), axis=1)
    return out


def qam_map(p, levels_re: LevelSet, levels_im: LevelSet) -> ComplexPoint:
    """Map one point to the nearest grid level per axis (after clipping)."""
    re, im = p
    kr = _nearest_level_block(np.array([re]), levels_re)[0]
    ki = _nearest_level_block(np.array([im]), levels_im)[0]
    return ComplexPoint(float(levels_re.levels[kr]), float(levels_im.levels[ki]))


def qam_map_block(re, im, levels_re: LevelSet, levels_im: LevelSet):
    """Vectorized :func:`qam_map`; returns ``(yre, yim, canonical grid index)``."""
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    if re.shape != im.shape or re.ndim != 1:
        raise ValueError("re and im must be equal-length 1-D arrays")
    kr = _nearest_level_block(re, levels_re)
    ki = _nearest_level_block(im, levels_im)
    idx = ki * levels_re.m + kr
    return levels_re.levels[kr], levels_im.levels[ki], idx


def levelset_to_json_dict(levels: LevelSet) -> dict:
    return {
        "type": "levels",
        "values": [float(v) for v in levels.levels],
        "v_min": levels.v_min,
        "v_max": levels.v_max,
    }


def levelset_from_json_dict(obj, ctx: str = "levels") -> LevelSet:
    from .params import _expect_mapping, _number, _number_list  # shared validators

    _expect_mapping(obj, ctx)
    if obj.get("type") != "levels":
        raise SchemaError(f"{ctx}.type: expected 'levels', got {obj.get('type')!r}")
    values = _number_list(obj.get("values"), f"{ctx}.values")
    v_min = _number(obj.get("v_min"), f"{ctx}.v_min")
    v_max = _number(obj.get("v_max"), f"{ctx}.v_max")
    try:
        return LevelSet(np.array(values), v_min, v_max)
    except ValueError as exc:
        raise SchemaError(f"{ctx}: {exc}") from exc


def constellation_to_json_dict(constellation: Constellation) -> dict:
    return {
        "type": "constellation",
        "points": [[float(a), float(b)] for a, b in constellation.points],
    }


def constellation_from_json_dict(obj, ctx: str = "constellation") -> Constellation:
    from .params import _expect_mapping, _point_list

    _expect_mapping(obj, ctx)
    if obj.get("type") != "constellation":
        raise SchemaError(f"{ctx}.type: expected 'constellation', got {obj.get('type')!r}")
    points = _point_list(obj.get("points"), f"{ctx}.points")
    try:
        return Constellation(np.array(points, dtype=np.float64).reshape(-1, 2))
    except ValueError as exc:
        raise SchemaError(f"{ctx}.points: {exc}") from exc


def levelset_to_json(levels: LevelSet) -> str:
    return json.dumps(levelset_to_json_dict(levels))


def constellation_to_json(constellation: Constellation) -> str:
    return json.dumps(constellation_to_json_dict(constellation))
