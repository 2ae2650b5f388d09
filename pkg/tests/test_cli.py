import json
import math

import numpy as np
import pytest

from constmap import (
    AffineDecoder,
    QamParams,
    SchemaError,
    gen_source,
    load_config,
    make_uniform_levels,
    mrc_init,
    save_decoder,
    save_params,
)
from constmap.cli import entrypoint
from constmap.config import DEFAULT_SNR_GRID, apply_overrides

MINIMAL = {"mappings": [{"name": "qam16", "kind": "qam"}]}


def _write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestLoadConfig:
    def test_minimal_defaults(self, tmp_path):
        cfg = load_config(_write_config(tmp_path, MINIMAL))
        assert cfg.seed == 0
        assert cfg.out_dir == "."
        assert cfg.source.kind == "gaussian-mixture"
        assert cfg.snr_test_db == DEFAULT_SNR_GRID
        assert cfg.n_eval == 100_000
        assert cfg.fixed_scale is False
        assert cfg.plot_samples == 10_000
        entry = cfg.entries[0]
        assert entry.name == "qam16"
        assert entry.mapping == QamParams(make_uniform_levels(4))
        assert entry.decoder == AffineDecoder()
        assert entry.train is False

    def test_trainable_defaults_by_kind(self, tmp_path):
        doc = {
            "mappings": [
                {"name": "q", "kind": "qam"},
                {"name": "r", "kind": "mrc"},
                {"name": "c", "kind": "mic", "n": 16},
            ]
        }
        cfg = load_config(_write_config(tmp_path, doc))
        assert [e.train for e in cfg.entries] == [False, True, True]

    def test_seed_argument_beats_file(self, tmp_path):
        path = _write_config(tmp_path, dict(MINIMAL, seed=7))
        assert load_config(path).seed == 7
        assert load_config(path, seed=42).seed == 42
        assert load_config(path, seed=42).train.seed == 42

    def test_params_path_relative_to_config(self, tmp_path):
        params = mrc_init(delta=11.0)
        save_params(tmp_path / "pre.json", params)
        dec = AffineDecoder(0.8, 0.1)
        save_decoder(tmp_path / "dec.json", dec)
        doc = {"mappings": [{"name": "pre", "params": "pre.json", "decoder": "dec.json"}]}
        cfg = load_config(_write_config(tmp_path, doc))
        entry = cfg.entries[0]
        assert entry.mapping.delta == 11.0
        assert entry.decoder == dec
        assert entry.train is False  # pretrained entries default to frozen

    def test_inf_snr_strings(self, tmp_path):
        doc = dict(MINIMAL, sweep={"snr_test_db": [10, "inf"]}, train={"snr_train_db": "inf"})
        cfg = load_config(_write_config(tmp_path, doc))
        assert cfg.snr_test_db == (10.0, math.inf)
        assert cfg.train.snr_train_db == math.inf

    def test_unknown_keys_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="config.mapings"):
            load_config(_write_config(tmp_path, {"mapings": []}))
        doc = dict(MINIMAL, sweep={"snr_grid": [10]})
        with pytest.raises(SchemaError, match="config.sweep.snr_grid"):
            load_config(_write_config(tmp_path, doc))
        doc = {"mappings": [{"name": "x", "kind": "qam", "layers": 3}]}
        with pytest.raises(SchemaError, match=r"config.mappings\[0\].layers"):
            load_config(_write_config(tmp_path, doc))

    def test_entry_validation(self, tmp_path):
        with pytest.raises(SchemaError, match=r"mappings\[0\].name"):
            load_config(_write_config(tmp_path, {"mappings": [{"kind": "qam"}]}))
        doc = {"mappings": [{"name": "a/b", "kind": "qam"}]}
        with pytest.raises(SchemaError, match="name"):
            load_config(_write_config(tmp_path, doc))
        doc = {"mappings": [{"name": "x", "kind": "qam"}, {"name": "x", "kind": "mrc"}]}
        with pytest.raises(SchemaError, match="unique"):
            load_config(_write_config(tmp_path, doc))
        doc = {"mappings": [{"name": "x", "kind": "mic", "n": 12}]}
        with pytest.raises(SchemaError, match="perfect square"):
            load_config(_write_config(tmp_path, doc))
        doc = {"mappings": [{"name": "x"}]}
        with pytest.raises(SchemaError, match="params path or a kind"):
            load_config(_write_config(tmp_path, doc))

    def test_train_section_validation(self, tmp_path):
        doc = dict(MINIMAL, train={"batch_size": 31})
        with pytest.raises(SchemaError, match="config.train"):
            load_config(_write_config(tmp_path, doc))
        doc = dict(MINIMAL, train={"stage1_iters": 1.5})
        with pytest.raises(SchemaError, match="stage1_iters"):
            load_config(_write_config(tmp_path, doc))

    def test_odd_eval_counts_rejected(self, tmp_path):
        doc = dict(MINIMAL, sweep={"n_eval": 999})
        with pytest.raises(SchemaError, match="n_eval"):
            load_config(_write_config(tmp_path, doc))
        doc = dict(MINIMAL, plot_samples=7)
        with pytest.raises(SchemaError, match="plot_samples"):
            load_config(_write_config(tmp_path, doc))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{broken")
        with pytest.raises(SchemaError, match="not valid JSON"):
            load_config(path)

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "nope.json")


class TestApplyOverrides:
    def test_nested_assignment(self):
        doc = {"train": {"batch_size": 32}}
        apply_overrides(doc, ["train.batch_size=64", "sweep.n_eval=1000"])
        assert doc["train"]["batch_size"] == 64
        assert doc["sweep"]["n_eval"] == 1000

    def test_list_index(self):
        doc = {"mappings": [{"name": "a"}, {"name": "b"}]}
        apply_overrides(doc, ["mappings.1.train=true", "mappings.0.name=qam"])
        assert doc["mappings"][1]["train"] is True
        assert doc["mappings"][0]["name"] == "qam"

    def test_json_values_with_string_fallback(self):
        doc = {}
        apply_overrides(doc, ["a=1.5", "b=[1,2]", "c=null", "d=hello", "e=\"5\""])
        assert doc == {"a": 1.5, "b": [1, 2], "c": None, "d": "hello", "e": "5"}

    def test_errors(self):
        with pytest.raises(SchemaError, match="expected key.path=value"):
            apply_overrides({}, ["novalue"])
        with pytest.raises(SchemaError, match="empty path segment"):
            apply_overrides({}, ["a..b=1"])
        with pytest.raises(SchemaError, match="index"):
            apply_overrides({"xs": [1]}, ["xs.5=2"])
        with pytest.raises(SchemaError, match="array index expected"):
            apply_overrides({"xs": [1]}, ["xs.tail=2"])
        with pytest.raises(SchemaError, match="cannot descend"):
            apply_overrides({"a": 3}, ["a.b.c=1"])


def _sweep_doc(out_dir):
    return {
        "out_dir": str(out_dir),
        "mappings": [
            {"name": "qam16", "kind": "qam"},
            {"name": "mic16", "kind": "mic", "n": 16, "train": True},
        ],
        "train": {"stage1_iters": 6, "stage2_iters": 4, "stage1_milestones": [],
                  "stage2_milestones": []},
        "sweep": {"snr_test_db": [10, "inf"], "n_eval": 2000},
    }


class TestCliCommands:
    def test_gen_source_writes_expected_values(self, tmp_path, capsys):
        out = tmp_path / "samples.txt"
        code = entrypoint(
            ["gen-source", "--kind", "gaussian", "--n", "8", "--seed", "3", "--out", str(out)]
        )
        assert code == 0
        assert "wrote 8 samples" in capsys.readouterr().out
        got = np.array([float(v) for v in out.read_text().split()])
        from constmap import SourceSpec

        want = gen_source(SourceSpec(kind="gaussian"), 8, 3)
        assert np.array_equal(got, want)

    def test_gen_source_round_trips_as_file_source(self, tmp_path):
        out = tmp_path / "samples.txt"
        assert entrypoint(["gen-source", "--n", "10", "--seed", "1", "--out", str(out)]) == 0
        reread = tmp_path / "reread.txt"
        code = entrypoint(
            ["gen-source", "--kind", "file", "--path", str(out), "--n", "10",
             "--out", str(reread)]
        )
        assert code == 0
        assert out.read_text() == reread.read_text()

    def test_train_writes_artifacts(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        cfg = _write_config(tmp_path, _sweep_doc(out_dir))
        code = entrypoint(["train", "--config", cfg, "--seed", "0"])
        assert code == 0
        text = capsys.readouterr().out
        assert "trained mic16" in text
        assert "skipped qam16" in text
        assert (out_dir / "mic16-params.json").exists()
        assert (out_dir / "mic16-decoder.json").exists()
        history = (out_dir / "mic16-history.csv").read_text().splitlines()
        assert history[0] == "iteration,stage,loss"
        assert len(history) == 1 + 10
        assert not (out_dir / "qam16-params.json").exists()

    def test_train_requires_a_trainable_entry(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, MINIMAL)
        code = entrypoint(["train", "--config", cfg, "--seed", "0"])
        assert code == 2
        assert capsys.readouterr().err.startswith("error: config: ")

    def test_sweep_end_to_end(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        cfg = _write_config(tmp_path, _sweep_doc(out_dir))
        code = entrypoint(["sweep", "--config", cfg, "--seed", "0"])
        assert code == 0
        lines = (out_dir / "metrics.csv").read_text().splitlines()
        assert lines[0].startswith("# metric:")
        assert lines[1] == "mapping,snr_train_db,snr_test_db,mse,n"
        rows = [line.split(",") for line in lines[2:]]
        assert [(r[0], r[2]) for r in rows] == [
            ("mic16", "10.0"),
            ("mic16", "inf"),
            ("qam16", "10.0"),
            ("qam16", "inf"),
        ]
        # trained rows record the training SNR; untrained rows record nan
        assert rows[0][1] == "10.0"
        assert rows[2][1] == "nan"
        assert all(r[4] == "2000" for r in rows)

    def test_sweep_repeat_runs_byte_identical(self, tmp_path):
        cfg_a = _write_config(tmp_path, _sweep_doc(tmp_path / "a"), "a.json")
        cfg_b = _write_config(tmp_path, _sweep_doc(tmp_path / "b"), "b.json")
        assert entrypoint(["sweep", "--config", cfg_a, "--seed", "5"]) == 0
        assert entrypoint(["sweep", "--config", cfg_b, "--seed", "5"]) == 0
        assert (tmp_path / "a/metrics.csv").read_bytes() == (tmp_path / "b/metrics.csv").read_bytes()
        assert (tmp_path / "a/mic16-params.json").read_bytes() == (
            tmp_path / "b/mic16-params.json"
        ).read_bytes()

    def test_set_overrides_reach_the_run(self, tmp_path):
        out_dir = tmp_path / "run"
        cfg = _write_config(tmp_path, _sweep_doc(out_dir))
        code = entrypoint(
            ["sweep", "--config", cfg, "--seed", "0", "--set", "sweep.n_eval=500",
             "--set", "mappings.1.train=false"]
        )
        assert code == 0
        lines = (out_dir / "metrics.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[2:]]
        assert all(r[4] == "500" for r in rows)
        assert all(r[1] == "nan" for r in rows)  # nothing was trained

    def test_export_constellation(self, tmp_path, capsys):
        params_path = tmp_path / "mrc.json"
        save_params(params_path, mrc_init())
        out = tmp_path / "plot"
        code = entrypoint(
            ["export-constellation", "--params", str(params_path), "--n", "100",
             "--seed", "2", "--out", str(out)]
        )
        assert code == 0
        assert (tmp_path / "plot.csv").exists()
        assert (tmp_path / "plot.svg").exists()

    def test_show_params(self, tmp_path, capsys):
        params_path = tmp_path / "mrc.json"
        save_params(params_path, mrc_init())
        assert entrypoint(["show-params", "--params", str(params_path)]) == 0
        text = capsys.readouterr().out
        assert "type: mrc" in text
        assert "delta: 20.0" in text
        assert "d_re" in text

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            entrypoint(["--version"])
        assert exc.value.code == 0
        assert "constmap" in capsys.readouterr().out


class TestCliExitCodes:
    def test_missing_config_is_io(self, tmp_path, capsys):
        code = entrypoint(["sweep", "--config", str(tmp_path / "nope.json"), "--seed", "0"])
        assert code == 3
        err = capsys.readouterr().err
        assert err.startswith("error: io: ")
        assert err.count("\n") == 1

    def test_schema_problem_is_config(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, {"mappings": [{"name": "x", "kind": "psk"}]})
        assert entrypoint(["sweep", "--config", cfg, "--seed", "0"]) == 2
        assert capsys.readouterr().err.startswith("error: config: ")

    def test_bad_override_value_is_config(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, _sweep_doc(tmp_path / "run"))
        code = entrypoint(
            ["sweep", "--config", cfg, "--seed", "0", "--set", "train.batch_size=31"]
        )
        assert code == 2
        assert "batch_size" in capsys.readouterr().err

    def test_malformed_override_is_config(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, _sweep_doc(tmp_path / "run"))
        assert entrypoint(["sweep", "--config", cfg, "--seed", "0", "--set", "oops"]) == 2
        assert capsys.readouterr().err.startswith("error: config: ")

    def test_bad_gen_source_count_is_config(self, tmp_path, capsys):
        code = entrypoint(["gen-source", "--n", "0", "--out", str(tmp_path / "x.txt")])
        assert code == 2
        assert capsys.readouterr().err.startswith("error: config: ")

    def test_odd_export_count_is_config(self, tmp_path, capsys):
        params_path = tmp_path / "qam.json"
        save_params(params_path, QamParams(make_uniform_levels(4)))
        code = entrypoint(
            ["export-constellation", "--params", str(params_path), "--n", "99",
             "--out", str(tmp_path / "plot")]
        )
        assert code == 2
        assert "--n" in capsys.readouterr().err

    def test_missing_params_file_is_io(self, tmp_path, capsys):
        code = entrypoint(["show-params", "--params", str(tmp_path / "nope.json")])
        assert code == 3
        assert capsys.readouterr().err.startswith("error: io: ")

    def test_unwritable_output_is_io(self, tmp_path, capsys):
        out = tmp_path / "no_such_dir" / "x.txt"
        code = entrypoint(["gen-source", "--n", "2", "--out", str(out)])
        assert code == 3
        assert capsys.readouterr().err.startswith("error: io: ")

    def test_runtime_failure_is_three(self, tmp_path, capsys):
        # a file source that runs dry mid-run fails in the run phase
        vals = tmp_path / "vals.txt"
        vals.write_text("1.0\n")
        code = entrypoint(
            ["gen-source", "--kind", "file", "--path", str(vals), "--n", "5",
             "--out", str(tmp_path / "x.txt")]
        )
        assert code == 3
        assert capsys.readouterr().err.startswith("error: runtime: ")
