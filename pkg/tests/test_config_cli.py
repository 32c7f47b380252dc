"""Experiment-config validation and the command-line front end.

CLI commands are exercised in-process through cli.main(argv) with tiny
networks/epoch counts; every test works inside pytest's tmp_path.
"""
import csv
import json

import numpy as np
import pytest
import yaml

from pinnkit.cli import main
from pinnkit.config import (ExperimentConfig, dump_experiment, load_experiment,
                            parse_experiment)
from pinnkit.errors import ConfigError


# ---------------------------------------------------------------- config ----

def test_minimal_config_uses_protocol_defaults():
    exp = parse_experiment({"problem": {"name": "transport"}})
    t = exp.train
    assert t.layer_sizes == (2, 256, 256, 1)
    assert t.activation == "tanh"
    assert (t.n_collocation, t.n_boundary, t.epochs) == (256, 200, 80_000)
    assert t.lr0 == 1e-3 and t.decay_factor == 0.9 and t.decay_every == 1000
    assert t.normalize_inputs is True
    assert exp.seeds == (1, 2, 3)
    assert str(exp.out_dir) == "runs/transport"
    assert exp.diagnostics == ()


def test_per_problem_protocol_defaults():
    want = {
        "transport": (256, 200, 80_000),
        "klein-gordon": (256, 200, 80_000),
        "helmholtz": (512, 256, 80_000),
        "wave": (512, 256, 120_000),
    }
    for name, (n_col, n_bnd, epochs) in want.items():
        t = parse_experiment({"problem": {"name": name}}).train
        assert (t.n_collocation, t.n_boundary, t.epochs) == (n_col, n_bnd, epochs)


def test_width_shorthand_and_explicit_sizes():
    exp = parse_experiment({"problem": {"name": "helmholtz"},
                            "network": {"width": 32}})
    assert exp.train.layer_sizes == (2, 32, 32, 1)
    exp = parse_experiment({"problem": {"name": "transport"},
                            "network": {"layer_sizes": [2, 16, 16, 16, 1]}})
    assert exp.train.layer_sizes == (2, 16, 16, 16, 1)
    with pytest.raises(ConfigError) as err:
        parse_experiment({"problem": {"name": "transport"},
                          "network": {"width": 8, "layer_sizes": [2, 8, 1]}})
    assert err.value.path == "network.width"


def test_unknown_keys_report_dotted_paths():
    cases = [
        ({"problem": {"name": "transport"}, "nettwork": {}}, "nettwork"),
        ({"problem": {"name": "transport", "variant": 2}}, "problem.variant"),
        ({"problem": {"name": "transport"}, "network": {"hidden": 3}},
         "network.hidden"),
        ({"problem": {"name": "transport"}, "training": {"lr": 0.1}},
         "training.lr"),
        ({"problem": {"name": "transport"},
          "run": {"diagnostics": ["plots"]}}, "run.diagnostics[0]"),
    ]
    for doc, path in cases:
        with pytest.raises(ConfigError) as err:
            parse_experiment(doc)
        assert err.value.path == path, doc


def test_type_validation():
    cases = [
        ({"problem": {"name": "transport"},
          "training": {"epochs": "many"}}, "training.epochs"),
        ({"problem": {"name": "transport"},
          "training": {"normalize_inputs": 1}}, "training.normalize_inputs"),
        ({"problem": {"name": "transport"},
          "network": {"width": True}}, "network.width"),
        ({"problem": {"name": "transport"},
          "run": {"seeds": [1, True]}}, "run.seeds[1]"),
        ({"problem": {"name": "transport"}, "run": {"seeds": []}}, "run.seeds"),
    ]
    for doc, path in cases:
        with pytest.raises(ConfigError) as err:
            parse_experiment(doc)
        assert err.value.path == path, doc


def test_problem_name_checked():
    with pytest.raises(ConfigError) as err:
        parse_experiment({"network": {"width": 8}})
    assert err.value.path == "problem.name"
    with pytest.raises(ConfigError) as err:
        parse_experiment({"problem": {"name": "heat"}})
    assert err.value.path == "problem.name"


def test_problem_options_forwarded():
    exp = parse_experiment({"problem": {"name": "klein-gordon",
                                        "options": {"literal_zero_init": True}}})
    assert exp.train.problem_options == {"literal_zero_init": True}


def test_dump_load_round_trip():
    doc = {
        "problem": {"name": "wave"},
        "network": {"width": 24, "activation": "sine", "omega0": 10.0},
        "training": {"epochs": 500, "lr0": 2e-3, "w_boundary": 5.0},
        "run": {"out_dir": "runs/w", "seeds": [4, 5], "diagnostics": ["stats"]},
    }
    exp = parse_experiment(doc)
    again = parse_experiment(yaml.safe_load(dump_experiment(exp)))
    assert again == exp


def test_load_experiment_resolves_out_dir(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text("problem:\n  name: transport\nrun:\n  out_dir: out/a\n")
    exp = load_experiment(cfg)
    assert exp.out_dir == tmp_path / "out" / "a"


# ------------------------------------------------------------------- cli ----

def _tiny_yaml(tmp_path, **overrides):
    doc = {
        "problem": {"name": "transport"},
        "network": {"width": 8, "activation": "tanh"},
        "training": {"epochs": 40, "n_collocation": 16, "n_boundary": 16,
                     "snapshot_every": 20},
        "run": {"out_dir": str(tmp_path / "out"), "seeds": [1, 2],
                "diagnostics": ["certificate", "stats"]},
    }
    for section, vals in overrides.items():
        doc.setdefault(section, {}).update(vals)
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_cli_train_writes_artifacts(tmp_path):
    cfg = _tiny_yaml(tmp_path)
    assert main(["train", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("config.yaml", "summary.csv",
                 "checkpoint-seed1.json", "history-seed1.csv",
                 "grid-seed1.csv", "certificate-seed1.json", "stats-seed1.csv",
                 "checkpoint-seed2.json", "history-seed2.csv"):
        assert (out / name).exists(), name
    rows = _read_csv(out / "summary.csv")
    assert rows[0] == ["seed", "mae"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "avg", "best"]
    maes = [float(r[1]) for r in rows[1:3]]
    assert float(rows[4][1]) == min(maes)
    assert float(rows[3][1]) == pytest.approx(sum(maes) / 2.0, rel=1e-12)
    # depth-3 network: certificate diagnostics must record why they bailed
    cert = json.loads((out / "certificate-seed1.json").read_text())
    assert "skipped" in cert
    grid = _read_csv(out / "grid-seed1.csv")
    assert grid[0] == ["x0", "x1", "prediction", "exact", "abs_error"]
    assert len(grid) == 1 + 128 * 128


def test_cli_train_rerun_from_snapshot_is_byte_identical(tmp_path):
    cfg = _tiny_yaml(tmp_path)
    assert main(["train", "--config", str(cfg),
                 "--out", str(tmp_path / "a")]) == 0
    # rerun from the embedded config snapshot, not the original file
    assert main(["train", "--config", str(tmp_path / "a" / "config.yaml"),
                 "--out", str(tmp_path / "b")]) == 0
    for name in ("summary.csv", "checkpoint-seed1.json", "grid-seed2.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, name
    # history matches except for the wall-clock column
    a = _read_csv(tmp_path / "a" / "history-seed1.csv")
    b = _read_csv(tmp_path / "b" / "history-seed1.csv")
    drop = a[0].index("seconds")
    assert [r[:drop] + r[drop + 1:] for r in a] == \
           [r[:drop] + r[drop + 1:] for r in b]


def test_cli_train_overrides(tmp_path):
    cfg = _tiny_yaml(tmp_path)
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg), "--out", str(out),
                 "--seed", "5", "--epochs", "10"]) == 0
    rows = _read_csv(out / "summary.csv")
    assert [r[0] for r in rows[1:]] == ["5", "avg", "best"]
    snap = yaml.safe_load((out / "config.yaml").read_text())
    assert snap["training"]["epochs"] == 10
    assert snap["run"]["seeds"] == [5]


def test_cli_train_bad_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("problem:\n  name: transport\ntraining:\n  lr: 1\n")
    assert main(["train", "--config", str(path)]) == 2
    assert "training.lr" in capsys.readouterr().err


def test_cli_train_nonfinite_exits_1(tmp_path):
    cfg = _tiny_yaml(tmp_path, network={"activation": "softplus"},
                     training={"lr0": 1e200, "epochs": 10})
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["train", "--config", str(cfg)]) == 1
    rows = _read_csv(tmp_path / "out" / "summary.csv")
    assert rows == [["seed", "mae"]]  # no seed finished


def test_cli_diagnose_depth3_skips_certificate(tmp_path):
    cfg = _tiny_yaml(tmp_path)
    assert main(["train", "--config", str(cfg), "--seed", "1"]) == 0
    ckpt = tmp_path / "out" / "checkpoint-seed1.json"
    diag = tmp_path / "diag"
    assert main(["diagnose", str(ckpt), "--out", str(diag),
                 "--bins", "10"]) == 0
    cert = json.loads((diag / "certificate.json").read_text())
    assert "skipped" in cert
    rows = _read_csv(diag / "stats.csv")
    assert rows[0][0] == "layer"
    assert len(rows) == 1 + 2 * 10  # two hidden layers x 10 bins


def test_cli_diagnose_missing_checkpoint_exits_2(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["diagnose", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_cli_witness_then_diagnose_certifies(tmp_path, capsys):
    out = tmp_path / "w"
    assert main(["witness", "--problem", "transport", "--n-points", "8",
                 "--width", "8", "--activation", "softplus", "--seed", "0",
                 "--out", str(out)]) == 0
    cert = json.loads((out / "witness-certificate.json").read_text())
    assert cert["verdict"] == "global-minimum-certified"
    assert cert["rank"] == 8
    # same sampler seed/count reproduces the construction batch, so the
    # standalone diagnose run re-certifies the saved checkpoint
    diag = tmp_path / "d"
    assert main(["diagnose", str(out / "witness-checkpoint.json"),
                 "--n-points", "8", "--seed", "0", "--out", str(diag)]) == 0
    cert = json.loads((diag / "certificate.json").read_text())
    assert cert["verdict"] == "global-minimum-certified"


def test_cli_witness_rank_deficit_exits_1(tmp_path, capsys):
    out = tmp_path / "w"
    assert main(["witness", "--problem", "transport", "--n-points", "8",
                 "--width", "7", "--activation", "softplus",
                 "--out", str(out)]) == 1
    assert "rank 7 < 8" in capsys.readouterr().err


def test_cli_reproduce_tiny_and_cache(tmp_path, capsys):
    argv = ["reproduce", "--table", "table1", "--widths", "8",
            "--activations", "tanh", "--seed", "1", "--epochs", "30",
            "--cache", str(tmp_path / "cache"), "--out", str(tmp_path / "o1")]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert "cache" not in first.split("wrote")[0]
    cells = _read_csv(tmp_path / "o1" / "cells.csv")
    assert cells[0][:4] == ["problem", "width", "activation", "seed"]
    assert len(cells) == 2
    table = _read_csv(tmp_path / "o1" / "table1.csv")
    assert table[0] == ["width", "tanh_avg", "tanh_best"]
    assert table[1][0] == "8"
    assert table[1][1] == table[1][2]  # single seed: avg == best

    argv[-1] = str(tmp_path / "o2")
    assert main(argv) == 0
    assert "(cache)" in capsys.readouterr().out
    a = (tmp_path / "o1" / "cells.csv").read_text()
    b = (tmp_path / "o2" / "cells.csv").read_text()
    # identical except the wall-clock column
    strip = lambda text: [r[:-1] for r in csv.reader(text.splitlines())]
    assert strip(a) == strip(b)


def test_cli_reproduce_table2_shape(tmp_path):
    assert main(["reproduce", "--table", "table2", "--problems", "klein-gordon",
                 "--widths", "8", "--activations", "sine", "--seed", "1",
                 "--epochs", "20", "--cache", str(tmp_path / "cache"),
                 "--out", str(tmp_path / "o")]) == 0
    table = _read_csv(tmp_path / "o" / "table2.csv")
    assert table[0] == ["problem", "width", "sine_avg", "sine_best"]
    assert table[1][:2] == ["klein-gordon", "8"]


def test_cli_reproduce_empty_scope_exits_2(tmp_path, capsys):
    assert main(["reproduce", "--table", "table1", "--activations", ",",
                 "--out", str(tmp_path / "o")]) == 2
    assert "no cells selected" in capsys.readouterr().err


def test_cli_reproduce_unknown_problem_exits_2(tmp_path, capsys):
    assert main(["reproduce", "--table", "table2", "--problems", "heat",
                 "--out", str(tmp_path / "o")]) == 2
    assert "heat" in capsys.readouterr().err


def test_cli_out_root_redirects_relative_paths(tmp_path, monkeypatch):
    monkeypatch.setenv("PINNKIT_OUT_ROOT", str(tmp_path))
    cfg = _tiny_yaml(tmp_path)
    assert main(["train", "--config", str(cfg), "--out", "rel/x",
                 "--seed", "1", "--epochs", "10"]) == 0
    assert (tmp_path / "rel" / "x" / "summary.csv").exists()
