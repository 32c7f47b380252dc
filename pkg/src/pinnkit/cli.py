"""Command-line front end: train, diagnose, reproduce, witness.

All commands write post-hoc artifacts (CSV/JSON files) under an output
directory; nothing is plotted in-process.  Exit codes: 0 success,
1 training/validation failure, 2 I/O or config error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, dump_experiment, load_experiment
from .errors import ConfigError, ConstructionFailedError, NonFiniteLossError
from .network import load_checkpoint, pre_activation_stats, save_checkpoint
from .pdes import PROBLEMS, get_problem, sample_collocation
from .repro import (DEFAULT_SEEDS, TABLE1_ACTIVATIONS, TABLE1_SUBSET_WIDTHS,
                    TABLE1_WIDTHS, TABLE2_ACTIVATIONS, TABLE2_PROBLEMS,
                    TABLE2_SUBSET, TABLE2_WIDTHS, cell_config,
                    default_cache_dir, run_cell)
from .theory import construct_global_minimum, theorem1_certificate
from .training import (evaluate_mae, evaluation_grid, normalize_problem,
                       normalizer_for, train, write_history)

GRID_RESOLUTION = 128


def _out_root(path: Path) -> Path:
    """Apply the optional output-root override to relative paths."""
    root = os.environ.get("PINNKIT_OUT_ROOT")
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _certificate_payload(cert) -> dict:
    return {
        "verdict": cert.verdict,
        "rank": cert.rank,
        "n_points": cert.n_points,
        "n_hidden": cert.n_hidden,
        "coeff_min_abs": cert.coeff_min_abs,
        "grad_w2_norm": cert.grad_w2_norm,
        "max_abs_residual": cert.max_abs_residual,
        "singular_values": [float(s) for s in cert.singular_values],
        "tolerances": dataclasses.asdict(cert.tolerances),
    }


def _write_stats_csv(path: Path, stats):
    rows = []
    for layer, st in enumerate(stats, start=1):
        for lo, hi, count in zip(st.bin_edges[:-1], st.bin_edges[1:], st.counts):
            rows.append([layer, repr(float(lo)), repr(float(hi)), int(count),
                         repr(st.fraction_in_central_band),
                         repr(st.mean), repr(st.std)])
    _write_csv(path, ("layer", "bin_lo", "bin_hi", "count",
                      "fraction_in_central_band", "mean", "std"), rows)


def _write_grid_csv(path: Path, params, problem, normalized_inputs: bool,
                    resolution: int = GRID_RESOLUTION):
    from .network import forward

    pts = evaluation_grid(problem, resolution)
    inputs = normalizer_for(problem).to_unit(pts) if normalized_inputs else pts
    pred = np.empty(len(pts))
    for start in range(0, len(pts), 8192):
        out, _ = forward(params, inputs[start:start + 8192])
        pred[start:start + 8192] = out[:, 0]
    exact = problem.exact(pts)
    err = np.abs(pred - exact)
    header = [f"x{i}" for i in range(problem.d)] + ["prediction", "exact",
                                                    "abs_error"]
    rows = ([repr(float(v)) for v in pts[j]]
            + [repr(float(pred[j])), repr(float(exact[j])), repr(float(err[j]))]
            for j in range(len(pts)))
    _write_csv(path, header, rows)


def _seed_diagnostics(out_dir: Path, seed: int, params, problem,
                      normalized: bool, diagnostics, batch_seed: int = 0):
    working = normalize_problem(problem)[0] if normalized else problem
    if "certificate" in diagnostics:
        path = out_dir / f"certificate-seed{seed}.json"
        batch = sample_collocation(working, 64, batch_seed)
        try:
            cert = theorem1_certificate(params, working, batch)
            payload = _certificate_payload(cert)
        except ValueError as exc:
            payload = {"skipped": str(exc)}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
    if "stats" in diagnostics:
        batch = sample_collocation(working, 1024, batch_seed)
        stats = pre_activation_stats(params, batch)
        _write_stats_csv(out_dir / f"stats-seed{seed}.csv", stats)


def cmd_train(args) -> int:
    exp = load_experiment(args.config)
    if args.seed:
        exp = dataclasses.replace(exp, seeds=tuple(_parse_int_list(args.seed)))
    if args.epochs is not None:
        exp = dataclasses.replace(
            exp, train=dataclasses.replace(exp.train, epochs=args.epochs))
    if args.out:
        exp = dataclasses.replace(exp, out_dir=Path(args.out))
    out_dir = _out_root(exp.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.yaml").write_text(dump_experiment(exp))

    problem = get_problem(exp.train.problem, **exp.train.problem_options)
    summary_rows = []
    failure = None
    for cfg in exp.seed_configs():
        print(f"training {cfg.problem} seed {cfg.seed} "
              f"({cfg.epochs} epochs, width {max(cfg.layer_sizes[1:-1])}, "
              f"{cfg.activation})", flush=True)
        try:
            params, history = train(cfg)
        except NonFiniteLossError as exc:
            failure = f"seed {cfg.seed}: {exc}"
            print(failure, file=sys.stderr)
            break
        mae = evaluate_mae(params, problem,
                           normalized_inputs=cfg.normalize_inputs)
        summary_rows.append((cfg.seed, mae))
        save_checkpoint(out_dir / f"checkpoint-seed{cfg.seed}.json", params,
                        normalized_inputs=cfg.normalize_inputs,
                        domain=problem.domain,
                        extra={"problem": cfg.problem, "seed": cfg.seed})
        write_history(out_dir / f"history-seed{cfg.seed}.csv", history)
        _write_grid_csv(out_dir / f"grid-seed{cfg.seed}.csv", params, problem,
                        cfg.normalize_inputs)
        _seed_diagnostics(out_dir, cfg.seed, params, problem,
                          cfg.normalize_inputs, exp.diagnostics)
        print(f"  seed {cfg.seed}: mae {mae:.6f}", flush=True)

    rows = [[s, repr(m)] for s, m in summary_rows]
    if summary_rows:
        maes = [m for _, m in summary_rows]
        rows.append(["avg", repr(sum(maes) / len(maes))])
        rows.append(["best", repr(min(maes))])
        print(f"avg mae {sum(maes) / len(maes):.6f}   "
              f"best mae {min(maes):.6f}")
    _write_csv(out_dir / "summary.csv", ("seed", "mae"), rows)
    return 1 if failure else 0


def cmd_diagnose(args) -> int:
    ckpt_path = Path(args.checkpoint)
    if not ckpt_path.exists():
        print(f"checkpoint not found: {ckpt_path}", file=sys.stderr)
        return 2
    params, meta = load_checkpoint(ckpt_path)
    problem_name = args.problem or meta.get("extra", {}).get("problem")
    if not problem_name:
        print("checkpoint does not name its problem; pass --problem",
              file=sys.stderr)
        return 2
    if problem_name not in PROBLEMS:
        print(f"unknown problem {problem_name!r}", file=sys.stderr)
        return 2
    problem = get_problem(problem_name)
    normalized = bool(meta.get("normalized_inputs"))
    working = normalize_problem(problem)[0] if normalized else problem

    out_dir = _out_root(Path(args.out))
    out_dir.mkdir(parents=True, exist_ok=True)

    batch = sample_collocation(working, args.n_points, args.seed)
    try:
        cert = theorem1_certificate(params, working, batch)
        payload = _certificate_payload(cert)
        print(f"certificate: {cert.verdict} (rank {cert.rank}/{cert.n_points}, "
              f"max |residual| {cert.max_abs_residual:.3e})")
    except ValueError as exc:
        payload = {"skipped": str(exc)}
        print(f"certificate skipped: {exc}")
    with open(out_dir / "certificate.json", "w") as fh:
        json.dump(payload, fh, indent=1)

    stats_batch = sample_collocation(working, 1024, args.seed)
    stats = pre_activation_stats(params, stats_batch, bins=args.bins)
    _write_stats_csv(out_dir / "stats.csv", stats)
    for i, st in enumerate(stats, start=1):
        print(f"layer {i}: fraction in central band "
              f"{st.fraction_in_central_band:.3f}, mean {st.mean:.3f}, "
              f"std {st.std:.3f}")
    return 0


def _table_scope(args):
    """Resolve the (problems, widths, activations) cell grid for a table."""
    if args.table == "table1":
        problems = ["transport"]
        widths = list(TABLE1_WIDTHS if args.full else TABLE1_SUBSET_WIDTHS)
        acts = list(TABLE1_ACTIVATIONS)
    else:
        if args.full:
            problems = list(TABLE2_PROBLEMS)
            widths = list(TABLE2_WIDTHS)
            acts = list(TABLE2_ACTIVATIONS)
        else:
            problems = sorted({p for p, _, _ in TABLE2_SUBSET})
            widths = sorted({w for _, w, _ in TABLE2_SUBSET})
            acts = sorted({a for _, _, kinds in TABLE2_SUBSET for a in kinds})
    if args.problems:
        problems = _parse_str_list(args.problems)
    if args.widths:
        widths = _parse_int_list(args.widths)
    if args.activations:
        acts = _parse_str_list(args.activations)
    for p in problems:
        if p not in PROBLEMS:
            raise ConfigError("problems", f"unknown problem {p!r}")
        if args.table == "table1" and p != "transport":
            raise ConfigError("problems", "table1 covers the transport problem")
    return problems, widths, acts


def cmd_reproduce(args) -> int:
    problems, widths, acts = _table_scope(args)
    seeds = tuple(_parse_int_list(args.seed)) if args.seed else DEFAULT_SEEDS
    if not problems or not widths or not acts or not seeds:
        print("no cells selected", file=sys.stderr)
        return 2
    out_dir = _out_root(Path(args.out or f"repro-{args.table}"))
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = Path(args.cache) if args.cache else default_cache_dir()

    cell_rows = []
    table = {}  # (problem, width, act) -> (avg, best)
    for prob in problems:
        for width in widths:
            for act in acts:
                maes = []
                for seed in seeds:
                    cfg = cell_config(prob, width, act, seed,
                                      epochs=args.epochs)
                    res = run_cell(cfg, cache_dir=cache)
                    maes.append(res.mae)
                    src = "cache" if res.cached else f"{res.seconds:.0f}s"
                    print(f"{prob} w{width} {act} seed {seed}: "
                          f"mae {res.mae:.6f} ({src})", flush=True)
                    cell_rows.append([prob, width, act, seed, repr(res.mae),
                                      repr(res.final_residual_loss),
                                      repr(res.final_boundary_loss),
                                      f"{res.seconds:.1f}"])
                table[(prob, width, act)] = (sum(maes) / len(maes), min(maes))

    _write_csv(out_dir / "cells.csv",
               ("problem", "width", "activation", "seed", "mae",
                "final_residual_loss", "final_boundary_loss", "seconds"),
               cell_rows)

    header = ["width"] if args.table == "table1" else ["problem", "width"]
    for act in acts:
        header += [f"{act}_avg", f"{act}_best"]
    rows = []
    for prob in problems:
        for width in widths:
            row = [width] if args.table == "table1" else [prob, width]
            for act in acts:
                avg, best = table[(prob, width, act)]
                row += [repr(avg), repr(best)]
            rows.append(row)
    _write_csv(out_dir / f"{args.table}.csv", header, rows)
    print(f"wrote {out_dir / f'{args.table}.csv'}")
    return 0


def cmd_witness(args) -> int:
    if args.problem not in PROBLEMS:
        print(f"unknown problem {args.problem!r}", file=sys.stderr)
        return 2
    problem = get_problem(args.problem)
    out_dir = _out_root(Path(args.out))
    out_dir.mkdir(parents=True, exist_ok=True)
    batch = sample_collocation(problem, args.n_points, args.seed)
    try:
        params, info = construct_global_minimum(
            problem, batch, args.width, args.activation, seed=args.seed)
    except ConstructionFailedError as exc:
        print(f"construction failed: rank {exc.rank} < {exc.required} "
              f"(width {args.width}, {args.n_points} points)", file=sys.stderr)
        return 1
    cert = theorem1_certificate(params, problem, batch)
    save_checkpoint(out_dir / "witness-checkpoint.json", params,
                    normalized_inputs=False, domain=problem.domain,
                    extra={"problem": args.problem, "n_points": args.n_points})
    with open(out_dir / "witness-certificate.json", "w") as fh:
        json.dump(_certificate_payload(cert), fh, indent=1)
    print(f"witness: {cert.verdict} (rank {cert.rank}/{cert.n_points}, "
          f"max |residual| {cert.max_abs_residual:.3e})")
    return 0 if cert.verdict == "global-minimum-certified" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinnkit",
        description="Train and diagnose physics-informed neural networks "
                    "on benchmark PDEs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train per config file")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default=None, help="override output dir")
    p_train.add_argument("--seed", default=None,
                         help="override seed list, e.g. 1,2,3")
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.set_defaults(func=cmd_train)

    p_diag = sub.add_parser("diagnose", help="certificate + stats for a checkpoint")
    p_diag.add_argument("checkpoint")
    p_diag.add_argument("--problem", default=None)
    p_diag.add_argument("--out", default="diagnose")
    p_diag.add_argument("--n-points", type=int, default=64)
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--bins", type=int, default=50)
    p_diag.set_defaults(func=cmd_diagnose)

    p_rep = sub.add_parser("reproduce", help="benchmark table sweeps")
    p_rep.add_argument("--table", choices=("table1", "table2"), required=True)
    p_rep.add_argument("--out", default=None)
    p_rep.add_argument("--widths", default=None, help="e.g. 64,256")
    p_rep.add_argument("--activations", default=None, help="e.g. tanh,cosine")
    p_rep.add_argument("--problems", default=None, help="table2 problem list")
    p_rep.add_argument("--seed", default=None, help="seed list, e.g. 1,2,3")
    p_rep.add_argument("--epochs", type=int, default=None,
                       help="override epochs per cell")
    p_rep.add_argument("--full", action="store_true",
                       help="full benchmark-table sweep instead of the subset")
    p_rep.add_argument("--cache", default=None, help="cell cache directory")
    p_rep.set_defaults(func=cmd_reproduce)

    p_wit = sub.add_parser("witness", help="construct a zero-residual witness")
    p_wit.add_argument("--problem", required=True)
    p_wit.add_argument("--n-points", type=int, required=True)
    p_wit.add_argument("--width", type=int, required=True)
    p_wit.add_argument("--activation", required=True)
    p_wit.add_argument("--seed", type=int, default=0)
    p_wit.add_argument("--out", default="witness")
    p_wit.set_defaults(func=cmd_witness)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteLossError as exc:
        print(f"training failure: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
