"""Experiment configuration: one JSON document plus dotted-key overrides.

The document shape (all sections optional except ``mappings``)::

    {
      "seed": 0,
      "out_dir": "results",
      "source": {"kind": "gaussian-mixture", ...},
      "mappings": [
        {"name": "qam16", "kind": "qam", "m": 4},
        {"name": "mrc16", "kind": "mrc", "m": 4, "delta": 20.0, "train": true},
        {"name": "mic16", "kind": "mic", "n": 16, "train": true},
        {"name": "pre", "params": "trained.json", "decoder": "dec.json"}
      ],
      "train": {"stage1_iters": 2000, "stage1_lr": 0.001,
                "stage1_milestones": [500, 1500], "stage2_iters": 1000,
                "stage2_lr": 0.001, "stage2_milestones": [700],
                "lr_factor": 0.1, "batch_size": 32, "snr_train_db": 10.0,
                "delta": null},
      "sweep": {"snr_test_db": [0, 5, 10, 15, 20, "inf"], "n_eval": 100000,
                "fixed_scale": false},
      "plot_samples": 10000
    }

SNR fields accept the string ``"inf"`` for a noiseless channel. Referenced
parameter/decoder files are loaded eagerly, relative to the config file, so
every schema problem surfaces while the configuration is being read.
Validation errors name the offending field with a dotted path.
"""

import dataclasses
import json
import math
import os

from .core import make_uniform_levels
from .errors import SchemaError
from .mic import mic_from_qam
from .mrc import mrc_init
from .params import QamParams, _expect_mapping, _number, _number_list, load_params
from .sources import SourceSpec
from .train import AffineDecoder, StageSchedule, TrainConfig, load_decoder

DEFAULT_SNR_GRID = (0.0, 5.0, 10.0, 15.0, 20.0)


@dataclasses.dataclass(frozen=True)
class EntryConfig:
    """One mapping under experiment, fully materialized."""

    name: str
    mapping: object
    decoder: AffineDecoder
    train: bool


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out_dir: str
    source: SourceSpec
    entries: tuple
    train: TrainConfig
    snr_test_db: tuple
    n_eval: int
    fixed_scale: bool
    plot_samples: int


# ---------------------------------------------------------------------------
# Field readers. Each takes (value, dotted context) and raises SchemaError.

def _int(v, ctx):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{ctx}: expected integer, got {type(v).__name__}")
    return v


def _str(v, ctx):
    if not isinstance(v, str):
        raise SchemaError(f"{ctx}: expected string, got {type(v).__name__}")
    return v


def _bool(v, ctx):
    if not isinstance(v, bool):
        raise SchemaError(f"{ctx}: expected boolean, got {type(v).__name__}")
    return v


def _snr(v, ctx):
    """A number in dB, or the string "inf" for a noiseless channel."""
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise SchemaError(f"{ctx}: expected number or \"inf\", got {v!r}")
    return _number(v, ctx)


def _check_keys(obj, allowed, ctx):
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{ctx}.{key}: unknown field (known: {', '.join(sorted(allowed))})")


def _get(obj, key, ctx, reader, default):
    if key not in obj or obj[key] is None:
        return default
    return reader(obj[key], f"{ctx}.{key}")


# ---------------------------------------------------------------------------
# Section parsers.

def source_from_json_dict(obj, ctx: str = "source") -> SourceSpec:
    _expect_mapping(obj, ctx)
    _check_keys(
        obj,
        {"kind", "mean", "std", "means", "stds", "weights", "clip_min", "clip_max", "path"},
        ctx,
    )
    kwargs = {
        "kind": _get(obj, "kind", ctx, _str, "gaussian-mixture"),
        "mean": _get(obj, "mean", ctx, _number, 0.0),
        "std": _get(obj, "std", ctx, _number, 1.0),
        "clip_min": _get(obj, "clip_min", ctx, _number, -2.0),
        "clip_max": _get(obj, "clip_max", ctx, _number, 2.0),
        "path": _get(obj, "path", ctx, _str, None),
    }
    for key, default in (("means", (-0.35, 0.35)), ("stds", (0.45, 0.45)), ("weights", (0.5, 0.5))):
        kwargs[key] = tuple(_get(obj, key, ctx, _number_list, list(default)))
    try:
        return SourceSpec(**kwargs)
    except ValueError as exc:
        raise SchemaError(f"{ctx}: {exc}") from exc


def _mapping_from_entry(obj, ctx, base_dir):
    if "params" in obj and obj["params"] is not None:
        rel = _str(obj["params"], f"{ctx}.params")
        return load_params(os.path.join(base_dir, rel)), True
    kind = _get(obj, "kind", ctx, _str, None)
    if kind is None:
        raise SchemaError(f"{ctx}: needs either a params path or a kind")
    v_min = _get(obj, "v_min", ctx, _number, -2.0)
    v_max = _get(obj, "v_max", ctx, _number, 2.0)
    delta = _get(obj, "delta", ctx, _number, 20.0)
    try:
        if kind == "qam":
            return QamParams(make_uniform_levels(_get(obj, "m", ctx, _int, 4), v_min, v_max)), False
        if kind == "mrc":
            return mrc_init(_get(obj, "m", ctx, _int, 4), v_min, v_max, delta), False
        if kind == "mic":
            n = _get(obj, "n", ctx, _int, 16)
            side = math.isqrt(n) if n > 0 else 0
            if side * side != n or side < 2:
                raise SchemaError(
                    f"{ctx}.n: must be a perfect square >= 4 for grid initialization, got {n}"
                )
            levels = make_uniform_levels(side, v_min, v_max)
            return mic_from_qam(levels, levels, delta), False
    except ValueError as exc:
        raise SchemaError(f"{ctx}: {exc}") from exc
    raise SchemaError(f"{ctx}.kind: expected one of qam/mrc/mic, got {kind!r}")


def entry_from_json_dict(obj, ctx, base_dir) -> EntryConfig:
    _expect_mapping(obj, ctx)
    _check_keys(
        obj,
        {"name", "kind", "m", "n", "v_min", "v_max", "delta", "params", "decoder", "train"},
        ctx,
    )
    if "name" not in obj:
        raise SchemaError(f"{ctx}.name: required")
    name = _str(obj["name"], f"{ctx}.name")
    if not name or any(ch in name for ch in ",\n\r/\\"):
        raise SchemaError(f"{ctx}.name: must be non-empty without , / \\ or newlines")
    mapping, pretrained = _mapping_from_entry(obj, ctx, base_dir)
    decoder = AffineDecoder()
    if obj.get("decoder") is not None:
        decoder = load_decoder(os.path.join(base_dir, _str(obj["decoder"], f"{ctx}.decoder")))
    default_train = not pretrained and not isinstance(mapping, QamParams)
    train = _get(obj, "train", ctx, _bool, default_train)
    return EntryConfig(name, mapping, decoder, train)


def train_from_json_dict(obj, ctx, seed) -> TrainConfig:
    _expect_mapping(obj, ctx)
    _check_keys(
        obj,
        {
            "stage1_iters",
            "stage1_lr",
            "stage1_milestones",
            "stage2_iters",
            "stage2_lr",
            "stage2_milestones",
            "lr_factor",
            "batch_size",
            "snr_train_db",
            "delta",
        },
        ctx,
    )
    factor = _get(obj, "lr_factor", ctx, _number, 0.1)

    def stage(tag, iters, lr, milestones):
        return StageSchedule(
            _get(obj, f"{tag}_iters", ctx, _int, iters),
            _get(obj, f"{tag}_lr", ctx, _number, lr),
            tuple(_get(obj, f"{tag}_milestones", ctx, _number_list, list(milestones))),
            factor,
        )

    try:
        return TrainConfig(
            stage1=stage("stage1", 2000, 1e-3, (500, 1500)),
            stage2=stage("stage2", 1000, 1e-3, (700,)),
            batch_size=_get(obj, "batch_size", ctx, _int, 32),
            snr_train_db=_get(obj, "snr_train_db", ctx, _snr, 10.0),
            seed=seed,
            delta=_get(obj, "delta", ctx, _number, None),
        )
    except ValueError as exc:
        raise SchemaError(f"{ctx}: {exc}") from exc


# ---------------------------------------------------------------------------
# Overrides and the top-level loader.

def apply_overrides(doc: dict, assignments) -> dict:
    """Apply ``a.b.c=value`` assignments onto the raw document in place.

    Values are parsed as JSON when possible and kept as strings otherwise;
    integer path segments index into arrays.
    """
    for text in assignments:
        if "=" not in text:
            raise SchemaError(f"override {text!r}: expected key.path=value")
        path, raw = text.split("=", 1)
        keys = path.split(".")
        if not all(keys):
            raise SchemaError(f"override {text!r}: empty path segment")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        for i, key in enumerate(keys[:-1]):
            node = _descend(node, key, ".".join(keys[: i + 1]), create=True)
        last = keys[-1]
        if isinstance(node, list):
            node[_index(last, path, len(node))] = value
        elif isinstance(node, dict):
            node[last] = value
        else:
            raise SchemaError(f"override {path!r}: {type(node).__name__} is not assignable")
    return doc


def _index(key, path, length):
    if not key.lstrip("-").isdigit():
        raise SchemaError(f"override {path!r}: array index expected, got {key!r}")
    i = int(key)
    if not -length <= i < length:
        raise SchemaError(f"override {path!r}: index {i} out of range for length {length}")
    return i


def _descend(node, key, path, create):
    if isinstance(node, list):
        return node[_index(key, path, len(node))]
    if isinstance(node, dict):
        if key not in node and create:
            node[key] = {}
        if key not in node:
            raise SchemaError(f"override {path!r}: no such field")
        return node[key]
    raise SchemaError(f"override {path!r}: cannot descend into {type(node).__name__}")


def config_from_json_dict(doc, base_dir: str = ".", seed=None) -> ExperimentConfig:
    ctx = "config"
    _expect_mapping(doc, ctx)
    _check_keys(
        doc, {"seed", "out_dir", "source", "mappings", "train", "sweep", "plot_samples"}, ctx
    )
    if seed is None:
        seed = _get(doc, "seed", ctx, _int, 0)
    src = doc.get("source")
    source = source_from_json_dict(src, f"{ctx}.source") if src is not None else SourceSpec()

    raw_entries = doc.get("mappings")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise SchemaError(f"{ctx}.mappings: expected a non-empty array")
    entries = tuple(
        entry_from_json_dict(e, f"{ctx}.mappings[{i}]", base_dir)
        for i, e in enumerate(raw_entries)
    )
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise SchemaError(f"{ctx}.mappings: names must be unique")

    train = train_from_json_dict(doc.get("train") or {}, f"{ctx}.train", seed)

    sweep = doc.get("sweep") or {}
    _expect_mapping(sweep, f"{ctx}.sweep")
    _check_keys(sweep, {"snr_test_db", "n_eval", "fixed_scale"}, f"{ctx}.sweep")
    raw_grid = sweep.get("snr_test_db")
    if raw_grid is None:
        grid = DEFAULT_SNR_GRID
    else:
        if not isinstance(raw_grid, list) or not raw_grid:
            raise SchemaError(f"{ctx}.sweep.snr_test_db: expected a non-empty array")
        grid = tuple(
            _snr(v, f"{ctx}.sweep.snr_test_db[{i}]") for i, v in enumerate(raw_grid)
        )
    n_eval = _get(sweep, "n_eval", f"{ctx}.sweep", _int, 100_000)
    if n_eval < 2 or n_eval % 2:
        raise SchemaError(f"{ctx}.sweep.n_eval: must be even and >= 2, got {n_eval}")
    fixed_scale = _get(sweep, "fixed_scale", f"{ctx}.sweep", _bool, False)
    plot_samples = _get(doc, "plot_samples", ctx, _int, 10_000)
    if plot_samples < 2 or plot_samples % 2:
        raise SchemaError(f"{ctx}.plot_samples: must be even and >= 2, got {plot_samples}")

    return ExperimentConfig(
        seed=seed,
        out_dir=_get(doc, "out_dir", ctx, _str, "."),
        source=source,
        entries=entries,
        train=train,
        snr_test_db=grid,
        n_eval=n_eval,
        fixed_scale=fixed_scale,
        plot_samples=plot_samples,
    )


def load_config(path, overrides=(), seed=None) -> ExperimentConfig:
    """Read, override and validate a config file; ``seed`` wins over the file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config: not valid JSON ({exc})") from exc
    _expect_mapping(doc, "config")
    apply_overrides(doc, overrides)
    base_dir = os.path.dirname(os.path.abspath(path))
    return config_from_json_dict(doc, base_dir, seed)
