"""Deterministic test sources: clipped reals from a few standard families.

Every generator draws from the (seed, stream) substream layout in ``_rng``,
so identical arguments give identical blocks. All outputs are clipped into
the source's clip range, which downstream mappings assume.
"""

import dataclasses

import numpy as np

from ._rng import SOURCE_KIND, philox, standard_normal, stream_id

_KINDS = ("uniform", "gaussian", "gaussian-mixture", "file")


@dataclasses.dataclass(frozen=True)
class SourceSpec:
    """What to sample. ``uniform`` covers the clip range; ``file`` reads
    one float per line (seed independent)."""

    kind: str = "gaussian-mixture"
    mean: float = 0.0
    std: float = 1.0
    means: tuple = (-0.35, 0.35)
    stds: tuple = (0.45, 0.45)
    weights: tuple = (0.5, 0.5)
    clip_min: float = -2.0
    clip_max: float = 2.0
    path: str = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown source kind: {self.kind!r}")
        object.__setattr__(self, "means", tuple(float(v) for v in self.means))
        object.__setattr__(self, "stds", tuple(float(v) for v in self.stds))
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        if not self.clip_min < self.clip_max:
            raise ValueError(
                f"need clip_min < clip_max, got [{self.clip_min}, {self.clip_max}]"
            )
        if self.kind == "gaussian" and not self.std > 0:
            raise ValueError(f"std must be positive, got {self.std}")
        if self.kind == "gaussian-mixture":
            k = len(self.means)
            if k == 0 or len(self.stds) != k or len(self.weights) != k:
                raise ValueError("means, stds and weights must have equal nonzero length")
            if any(s <= 0 for s in self.stds):
                raise ValueError("mixture stds must be positive")
            if any(w < 0 for w in self.weights):
                raise ValueError("mixture weights must be non-negative")
            if abs(sum(self.weights) - 1.0) > 1e-12:
                raise ValueError(f"mixture weights must sum to 1, got {sum(self.weights)}")
        if self.kind == "file" and not self.path:
            raise ValueError("file source needs a path")


def default_mixture() -> SourceSpec:
    """The default bimodal source: equal-weight Gaussians at -0.35 and 0.35
    with std 0.45, clipped to [-2, 2]."""
    return SourceSpec(kind="gaussian-mixture")


def gen_source(spec: SourceSpec, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """n clipped reals, reproducible from (spec, seed, stream)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if spec.kind == "file":
        values = _read_floats(spec.path, n)
    else:
        gen = philox(seed, stream_id(SOURCE_KIND, stream))
        if spec.kind == "uniform":
            values = spec.clip_min + (spec.clip_max - spec.clip_min) * gen.random(n)
        elif spec.kind == "gaussian":
            values = spec.mean + spec.std * standard_normal(gen, n)
        else:  # gaussian-mixture: component draws first, then one normal batch
            u = gen.random(n)
            cum = np.cumsum(spec.weights)
            comp = np.searchsorted(cum, u, side="right")
            comp = np.minimum(comp, len(spec.weights) - 1)
            z = standard_normal(gen, n)
            means = np.asarray(spec.means)
            stds = np.asarray(spec.stds)
            values = means[comp] + stds[comp] * z
    return np.clip(values, spec.clip_min, spec.clip_max)


def _read_floats(path, n: int) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{ln}: not a number: {line!r}") from None
            if len(values) == n:
                break
    if len(values) < n:
        raise ValueError(f"{path}: needed {n} values, found {len(values)}")
    return np.array(values, dtype=np.float64)
