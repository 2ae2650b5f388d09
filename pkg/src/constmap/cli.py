"""Command-line interface.

Commands: ``gen-source``, ``train``, ``sweep``, ``export-constellation``,
``show-params``. Every command runs in two phases: configuration loading,
then execution. Exit codes: 0 on success, 2 for configuration/schema
problems, 3 for runtime or I/O failures. Errors print exactly one line to
stderr of the form ``error: <kind>: <message>``.
"""

import argparse
import math
import os
import sys

from . import __version__
from .config import load_config
from .errors import SchemaError
from .params import load_params, save_params, to_json_dict
from .sources import SourceSpec, gen_source
from .sweep import SweepEntry, export_constellation, run_sweep, write_metrics_csv
from .train import save_decoder, train, write_history_csv

_SOURCE_KINDS = ("uniform", "gaussian", "gaussian-mixture", "file")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_source_flags(p):
    g = p.add_argument_group("source options")
    g.add_argument("--kind", choices=_SOURCE_KINDS, default="gaussian-mixture")
    g.add_argument("--mean", type=float, default=0.0, help="gaussian mean")
    g.add_argument("--std", type=float, default=1.0, help="gaussian std")
    g.add_argument("--means", type=_floats, help="mixture means, comma-separated")
    g.add_argument("--stds", type=_floats, help="mixture stds, comma-separated")
    g.add_argument("--weights", type=_floats, help="mixture weights, comma-separated")
    g.add_argument("--clip-min", type=float, default=-2.0)
    g.add_argument("--clip-max", type=float, default=2.0)
    g.add_argument("--path", help="input file for --kind file (one number per line)")


def _source_from_args(args) -> SourceSpec:
    kwargs = {
        "kind": args.kind,
        "mean": args.mean,
        "std": args.std,
        "clip_min": args.clip_min,
        "clip_max": args.clip_max,
        "path": args.path,
    }
    for key in ("means", "stds", "weights"):
        value = getattr(args, key)
        if value is not None:
            kwargs[key] = value
    return SourceSpec(**kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="constmap",
        description="Learnable constellation mappings over an AWGN channel.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-source", help="write deterministic source samples to a file")
    _add_source_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0, help="substream index")
    p.add_argument("--out", required=True, help="output file, one number per line")
    p.set_defaults(load=_load_gen_source, run=_run_gen_source)

    p = sub.add_parser("train", help="fine-tune the trainable mappings in a config")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY.PATH=VALUE",
        help="override a config field (repeatable)",
    )
    p.set_defaults(load=_load_with_config, run=_run_train)

    p = sub.add_parser("sweep", help="train as configured, then sweep over test SNRs")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY.PATH=VALUE",
        help="override a config field (repeatable)",
    )
    p.set_defaults(load=_load_with_config, run=_run_sweep)

    p = sub.add_parser(
        "export-constellation", help="write cluster CSV + SVG for a mapping"
    )
    _add_source_flags(p)
    p.add_argument("--params", required=True, help="mapping parameters (JSON)")
    p.add_argument("--n", type=int, default=10_000, help="sample count (even)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0, help="substream index")
    p.add_argument("--out", required=True, help="output stem (.csv and .svg appended)")
    p.set_defaults(load=_load_export, run=_run_export)

    p = sub.add_parser("show-params", help="print a parameter file in readable form")
    p.add_argument("--params", required=True, help="mapping parameters (JSON)")
    p.set_defaults(load=_load_show, run=_run_show)

    return parser


# ---------------------------------------------------------------------------
# Load phase (configuration errors -> exit 2).

def _load_gen_source(args):
    if args.n < 1:
        raise SchemaError(f"--n: must be >= 1, got {args.n}")
    return _source_from_args(args)


def _load_with_config(args):
    cfg = load_config(args.config, args.overrides, args.seed)
    if args.command == "train" and not any(e.train for e in cfg.entries):
        raise SchemaError("config.mappings: nothing to train (no entry has train=true)")
    return cfg


def _load_export(args):
    if args.n < 2 or args.n % 2:
        raise SchemaError(f"--n: must be even and >= 2, got {args.n}")
    return load_params(args.params), _source_from_args(args)


def _load_show(args):
    return load_params(args.params)


# ---------------------------------------------------------------------------
# Run phase (I/O and runtime errors -> exit 3).

def _run_gen_source(args, spec):
    block = gen_source(spec, args.n, args.seed, stream=args.stream)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for v in block:
            fh.write(repr(float(v)) + "\n")
    print(f"wrote {block.size} samples to {args.out}")


def _train_entries(cfg):
    """Train every train=true entry; yields (entry, result) pairs."""
    for entry in cfg.entries:
        if entry.train:
            yield entry, train(cfg.train, entry.mapping, cfg.source)


def _write_artifacts(cfg, entry, result):
    stem = os.path.join(cfg.out_dir, entry.name)
    save_params(stem + "-params.json", result.mapping)
    save_decoder(stem + "-decoder.json", result.decoder)
    write_history_csv(result.history, stem + "-history.csv")
    return stem


def _run_train(args, cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    for entry, result in _train_entries(cfg):
        stem = _write_artifacts(cfg, entry, result)
        final = result.history[-1][2] if result.history else math.nan
        print(
            f"trained {entry.name}: {len(result.history)} iterations, "
            f"final loss {final:.6g} -> {stem}-params.json"
        )
    for entry in cfg.entries:
        if not entry.train:
            print(f"skipped {entry.name} (train: false)")


def _run_sweep(args, cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    sweep_entries = []
    for entry in cfg.entries:
        if entry.train:
            result = train(cfg.train, entry.mapping, cfg.source)
            _write_artifacts(cfg, entry, result)
            sweep_entries.append(
                SweepEntry(entry.name, result.mapping, result.decoder, cfg.train.snr_train_db)
            )
            print(f"trained {entry.name}")
        else:
            sweep_entries.append(SweepEntry(entry.name, entry.mapping, entry.decoder))
    rows = run_sweep(
        sweep_entries,
        cfg.snr_test_db,
        cfg.source,
        n=cfg.n_eval,
        seed=cfg.seed,
        fixed_scale=cfg.fixed_scale,
    )
    out = os.path.join(cfg.out_dir, "metrics.csv")
    write_metrics_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")


def _run_export(args, state):
    mapping, spec = state
    samples = gen_source(spec, args.n, args.seed, stream=args.stream)
    csv_path, svg_path = export_constellation(mapping, samples, args.out)
    print(f"wrote {csv_path} and {svg_path}")


def _run_show(args, mapping):
    obj = to_json_dict(mapping)
    kind = obj.pop("type")
    print(f"type: {kind}")
    if "levels" in obj:
        lv = obj.pop("levels")
        print(f"levels ({len(lv['values'])} per axis, range [{lv['v_min']}, {lv['v_max']}]):")
        print("  " + "  ".join(repr(v) for v in lv["values"]))
    if "delta" in obj:
        print(f"delta: {obj.pop('delta')!r}")
    for key in ("d_re", "d_im"):
        if key in obj:
            print(f"{key}: " + "  ".join(repr(v) for v in obj.pop(key)))
    if "points" in obj:
        pts = obj.pop("points")
        print(f"points ({len(pts)}):")
        for re, im in pts:
            print(f"  {re!r}  {im!r}")


def _fail(kind: str, exc: BaseException) -> None:
    message = str(exc) or type(exc).__name__
    print(f"error: {kind}: {message}", file=sys.stderr)


def entrypoint(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        state = args.load(args)
    except OSError as exc:
        _fail("io", exc)
        return 3
    except (SchemaError, ValueError) as exc:
        _fail("config", exc)
        return 2
    try:
        args.run(args, state)
    except OSError as exc:
        _fail("io", exc)
        return 3
    except Exception as exc:  # runtime failures map to one exit code
        _fail("runtime", exc)
        return 3
    return 0
