"""Experiment config files: YAML in, validated ExperimentConfig out.

A config file binds one training setup to an output directory, a seed
list, and the post-training diagnostics to run.  Layout::

    problem:
      name: transport          # required; everything else has defaults
      options: {}              # forwarded to the problem factory
    network:
      width: 256               # shorthand for [d, width, width, 1]
      layer_sizes: [2, 256, 256, 1]   # explicit form; excludes `width`
      activation: cosine
      init: xavier-normal
      omega0: 30.0
    training:
      n_collocation: 256       # default depends on the problem
      n_boundary: 200
      epochs: 80000
      lr0: 1.0e-3
      beta1: 0.9
      beta2: 0.999
      eps: 1.0e-8
      decay_factor: 0.9
      decay_every: 1000
      w_residual: 1.0
      w_boundary: 1.0
      normalize_inputs: true
      snapshot_every: 200
    run:
      out_dir: runs/exp1       # default "runs/<problem name>"
      seeds: [1, 2, 3]
      diagnostics: [stats]     # subset of {certificate, stats}

Unknown keys anywhere are rejected with the dotted path of the offender.
Loading and dumping round-trip: dump(load(text)) parses to an equal config.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .pdes import PROBLEMS, get_problem
from .training import TrainConfig

DIAGNOSTIC_KINDS = ("certificate", "stats")

# Per-problem sampling/epoch defaults matching the benchmark protocol.
_PROTOCOL_DEFAULTS = {
    "transport": {"n_collocation": 256, "n_boundary": 200, "epochs": 80_000},
    "klein-gordon": {"n_collocation": 256, "n_boundary": 200, "epochs": 80_000},
    "helmholtz": {"n_collocation": 512, "n_boundary": 256, "epochs": 80_000},
    "wave": {"n_collocation": 512, "n_boundary": 256, "epochs": 120_000},
}


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig
    out_dir: Path
    seeds: tuple[int, ...]
    diagnostics: tuple[str, ...]

    def seed_configs(self) -> list[TrainConfig]:
        return [dataclasses.replace(self.train, seed=s) for s in self.seeds]


def _require_mapping(node, path):
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigError(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed, path):
    for key in node:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(where, "unknown key")


def _take(node, key, kind, path, default):
    if key not in node or node[key] is None:
        return default
    val = node[key]
    where = f"{path}.{key}"
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(where, f"expected a number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(where, f"expected an integer, got {val!r}")
        return int(val)
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(where, f"expected true/false, got {val!r}")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(where, f"expected a string, got {val!r}")
        return val
    raise AssertionError(kind)


def _int_list(node, key, path, default):
    if key not in node or node[key] is None:
        return default
    val = node[key]
    where = f"{path}.{key}"
    if not isinstance(val, list) or not val:
        raise ConfigError(where, f"expected a non-empty list, got {val!r}")
    out = []
    for i, item in enumerate(val):
        if isinstance(item, bool) or not isinstance(item, int):
            raise ConfigError(f"{where}[{i}]", f"expected an integer, got {item!r}")
        out.append(int(item))
    return out


def parse_experiment(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a parsed YAML document into an ExperimentConfig."""
    doc = _require_mapping(doc, "<root>")
    _check_keys(doc, ("problem", "network", "training", "run"), "")

    prob = _require_mapping(doc.get("problem"), "problem")
    _check_keys(prob, ("name", "options"), "problem")
    name = _take(prob, "name", str, "problem", None)
    if name is None:
        raise ConfigError("problem.name", "required")
    if name not in PROBLEMS:
        known = ", ".join(sorted(PROBLEMS))
        raise ConfigError("problem.name", f"unknown problem {name!r} (known: {known})")
    options = _require_mapping(prob.get("options"), "problem.options")
    d = get_problem(name).d

    net = _require_mapping(doc.get("network"), "network")
    _check_keys(net, ("width", "layer_sizes", "activation", "init", "omega0"),
                "network")
    if "width" in net and "layer_sizes" in net:
        raise ConfigError("network.width", "give either width or layer_sizes, not both")
    if "layer_sizes" in net:
        sizes = _int_list(net, "layer_sizes", "network", None)
    else:
        width = _take(net, "width", int, "network", 256)
        sizes = [d, width, width, 1]
    activation = _take(net, "activation", str, "network", "tanh")
    init = _take(net, "init", str, "network", "xavier-normal")
    omega0 = _take(net, "omega0", float, "network", 30.0)

    proto = _PROTOCOL_DEFAULTS[name]
    tr = _require_mapping(doc.get("training"), "training")
    _check_keys(tr, ("n_collocation", "n_boundary", "epochs", "lr0", "beta1",
                     "beta2", "eps", "decay_factor", "decay_every",
                     "w_residual", "w_boundary", "normalize_inputs",
                     "snapshot_every"), "training")

    run = _require_mapping(doc.get("run"), "run")
    _check_keys(run, ("out_dir", "seeds", "diagnostics"), "run")
    seeds = tuple(_int_list(run, "seeds", "run", [1, 2, 3]))
    out_dir = Path(_take(run, "out_dir", str, "run", f"runs/{name}"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = Path(base_dir) / out_dir
    diags = run.get("diagnostics")
    if diags is None:
        diags = []
    if not isinstance(diags, list):
        raise ConfigError("run.diagnostics", f"expected a list, got {diags!r}")
    for i, dd in enumerate(diags):
        if dd not in DIAGNOSTIC_KINDS:
            raise ConfigError(f"run.diagnostics[{i}]",
                              f"unknown diagnostic {dd!r} (known: "
                              f"{', '.join(DIAGNOSTIC_KINDS)})")

    train_cfg = TrainConfig(
        problem=name,
        layer_sizes=tuple(sizes),
        activation=activation,
        init=init,
        omega0=omega0,
        n_collocation=_take(tr, "n_collocation", int, "training",
                            proto["n_collocation"]),
        n_boundary=_take(tr, "n_boundary", int, "training", proto["n_boundary"]),
        epochs=_take(tr, "epochs", int, "training", proto["epochs"]),
        lr0=_take(tr, "lr0", float, "training", 1e-3),
        beta1=_take(tr, "beta1", float, "training", 0.9),
        beta2=_take(tr, "beta2", float, "training", 0.999),
        eps=_take(tr, "eps", float, "training", 1e-8),
        decay_factor=_take(tr, "decay_factor", float, "training", 0.9),
        decay_every=_take(tr, "decay_every", int, "training", 1000),
        w_residual=_take(tr, "w_residual", float, "training", 1.0),
        w_boundary=_take(tr, "w_boundary", float, "training", 1.0),
        normalize_inputs=_take(tr, "normalize_inputs", bool, "training", True),
        snapshot_every=_take(tr, "snapshot_every", int, "training", 200),
        seed=seeds[0],
        problem_options=dict(options),
    )
    return ExperimentConfig(train=train_cfg, out_dir=out_dir, seeds=seeds,
                            diagnostics=tuple(diags))


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
    return parse_experiment(doc, base_dir=path.parent)


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    t = cfg.train
    return {
        "problem": {"name": t.problem, "options": dict(t.problem_options)},
        "network": {
            "layer_sizes": list(t.layer_sizes),
            "activation": t.activation,
            "init": t.init,
            "omega0": t.omega0,
        },
        "training": {
            "n_collocation": t.n_collocation,
            "n_boundary": t.n_boundary,
            "epochs": t.epochs,
            "lr0": t.lr0,
            "beta1": t.beta1,
            "beta2": t.beta2,
            "eps": t.eps,
            "decay_factor": t.decay_factor,
            "decay_every": t.decay_every,
            "w_residual": t.w_residual,
            "w_boundary": t.w_boundary,
            "normalize_inputs": t.normalize_inputs,
            "snapshot_every": t.snapshot_every,
        },
        "run": {
            "out_dir": str(cfg.out_dir),
            "seeds": list(cfg.seeds),
            "diagnostics": list(cfg.diagnostics),
        },
    }


def dump_experiment(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(experiment_to_dict(cfg), sort_keys=False)
