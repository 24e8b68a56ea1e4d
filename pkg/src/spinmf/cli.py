"""Command-line surface tying the modules into reproducible pipelines.

Every subcommand writes machine-readable outputs (JSON/CSV) plus a run
manifest capturing the resolved parameters, seeds, and artifact paths, so
re-running the recorded command reproduces the outputs byte-for-byte.

Exit codes: 0 ok, 1 usage or bad input, 2 numerical abort, 3 size-guard
refusal. Flags can be defaulted through SPINMF_* environment variables
(SPINMF_SEED, SPINMF_ITERATIONS, SPINMF_BATCH, SPINMF_LR, SPINMF_OUT_DIR).
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bound_report, save_report
from .datasets import CATALOG, generate, npp_to_ising
from .errors import ContractViolation, NumericalAbort, SizeGuardRefusal
from .exact import exact_free_energy, exact_log_partition, exact_magnetization
from .gibbs import gibbs_sample
from .model import (
    IsingModel,
    load_model,
    magnetization,
    save_model,
    save_samples,
)
from .nmf import nmf_minimize, save_solution
from .ordering import criticality_order, inverse_order, load_order, random_order, save_order
from .rnn import load_checkpoint, sample, save_checkpoint
from .training import AnnealSchedule, TrainConfig, train, variational_free_energy_estimate
from .seeding import rng_for


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse's exit-2 behaviour onto exit 1
        raise _UsageError(message)


def _env(name: str, fallback):
    raw = os.environ.get(f"SPINMF_{name}")
    if raw is None:
        return fallback
    kind = type(fallback) if fallback is not None else str
    return kind(raw)


def _git_stamp() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5
        )
    except OSError:
        return None
    return out.stdout.strip() or None


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


class _Manifest:
    """Collects resolved parameters and artifact paths for one command."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.argv = list(getattr(args, "_argv", sys.argv[1:]))
        self.params = {
            k: v for k, v in vars(args).items() if k not in ("func", "_argv")
        }
        self.outputs: list[str] = []
        self.started = time.time()

    def record(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def write(self, out_dir: Path) -> None:
        payload = {
            "command": self.command,
            "argv": self.argv,
            "params": {k: (str(v) if isinstance(v, Path) else v) for k, v in self.params.items()},
            "outputs": self.outputs,
            "wall_clock_s": round(time.time() - self.started, 3),
            "version": __version__,
            "git": _git_stamp(),
        }
        _write_json(payload, out_dir / f"{self.command}_manifest.json")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_order(model, args):
    if getattr(args, "order", None):
        return load_order(args.order), None
    mode = getattr(args, "order_mode", "critical")
    if mode == "critical":
        return criticality_order(model, tie_break=args.tie_break, seed=args.seed)
    if mode == "inverse":
        order, forest = criticality_order(model, tie_break=args.tie_break, seed=args.seed)
        return inverse_order(order), forest
    if mode == "random":
        return random_order(model.n, seed=args.seed), None
    raise ContractViolation(f"unknown order mode {mode!r}")


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        iterations=args.iterations,
        anneal=AnnealSchedule(enabled=args.anneal == "on"),
        seed=args.seed,
    )


# ---------------------------------------------------------------------------
# Subcommands.

def cmd_gen(args) -> int:
    if args.list:
        for name, spec in sorted(CATALOG.items()):
            print(f"{name:18s} seed={spec.default_seed:<6d} {spec.description}")
        return 0
    if not args.name:
        raise _UsageError("gen requires --name (or --list)")
    manifest = _Manifest("gen", args)
    out = _out_dir(args)
    if args.name == "npp":
        if not args.numbers:
            raise _UsageError("gen --name npp requires --numbers a,b,c")
        numbers = [float(v) for v in args.numbers.split(",")]
        model = npp_to_ising(numbers)
    else:
        model = generate(args.name, args.seed)
    path = manifest.record(out / (args.out or f"{args.name}.json"))
    save_model(model, path)
    manifest.write(out)
    print(f"wrote {path} (n={model.n}, beta={model.beta})")
    return 0


def cmd_order(args) -> int:
    manifest = _Manifest("order", args)
    out = _out_dir(args)
    model = load_model(args.model)
    order, forest = _resolve_order(model, args)
    path = manifest.record(out / "order.json")
    save_order(order, forest, path)
    manifest.write(out)
    weight = forest.total_weight if forest else float("nan")
    print("order:", " ".join(str(v) for v in order.permutation))
    print(f"tree weight: {weight:.6g}")
    return 0


def cmd_train(args) -> int:
    manifest = _Manifest("train", args)
    out = _out_dir(args)
    model = load_model(args.model)
    order, _ = _resolve_order(model, args)
    cfg = _train_config(args)
    params, report = train(model, order, cfg)

    ckpt = manifest.record(out / "checkpoint.json")
    save_checkpoint(
        params, order, ckpt,
        extra={"config": {k: (vars(v) if hasattr(v, "__dict__") else v)
                          for k, v in vars(cfg).items()},
               "iteration": report.iterations},
    )
    report_csv = manifest.record(out / "train_report.csv")
    report.to_csv(report_csv)
    means_csv = manifest.record(out / "spin_means.csv")
    report.spin_means_to_csv(means_csv)
    if args.figures:
        from .report import render_training_figures

        for fig in render_training_figures(report, out, "train"):
            manifest.record(fig)
    manifest.write(out)
    print(f"final F={report.final_f:.6g}  best F={report.best_f:.6g}  ({ckpt})")
    return 0


def cmd_eval(args) -> int:
    manifest = _Manifest("eval", args)
    out = _out_dir(args)
    model = load_model(args.model)
    params, order, _ = load_checkpoint(args.checkpoint)
    f_mean, f_stderr = variational_free_energy_estimate(
        params, model, order, args.samples, seed=args.seed
    )
    batch = sample(params, order, args.samples, seed=args.seed)
    mag = magnetization(batch)
    payload = {
        "F_mean": f_mean,
        "F_stderr": f_stderr,
        "magnetization": mag.global_mean,
        "magnetization_stderr": mag.stderr,
        "per_spin_mean": mag.per_spin.tolist(),
        "samples": args.samples,
    }
    path = manifest.record(out / "eval.json")
    _write_json(payload, path)
    manifest.write(out)
    print(f"F = {f_mean:.6g} +/- {f_stderr:.2g}   <x> = {mag.global_mean:.6g}")
    return 0


def cmd_exact(args) -> int:
    manifest = _Manifest("exact", args)
    out = _out_dir(args)
    model = load_model(args.model)
    log_z = exact_log_partition(model)
    payload = {"log_Z": log_z, "F": -log_z / model.beta}
    if args.magnetization:
        global_mean, per_spin = exact_magnetization(model)
        payload["magnetization"] = global_mean
        payload["per_spin_mean"] = per_spin.tolist()
    path = manifest.record(out / "exact.json")
    _write_json(payload, path)
    manifest.write(out)
    print(f"log_Z = {log_z:.6g}   F = {-log_z / model.beta:.6g}")
    return 0


def cmd_gibbs(args) -> int:
    manifest = _Manifest("gibbs", args)
    out = _out_dir(args)
    model = load_model(args.model)
    samples = gibbs_sample(model, args.samples, args.burn_in, args.thin, args.seed)
    mag = magnetization(samples)
    std = float(samples.configurations.astype(float).mean(axis=1).std(ddof=1))
    payload = {
        "samples": args.samples,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "magnetization": mag.global_mean,
        "magnetization_std": std,
        "magnetization_stderr": mag.stderr,
        "per_spin_mean": mag.per_spin.tolist(),
    }
    path = manifest.record(out / "gibbs.json")
    _write_json(payload, path)
    if args.dump_samples:
        csv = manifest.record(out / "gibbs_samples.csv")
        save_samples(samples, csv)
    manifest.write(out)
    print(f"<x> = {mag.global_mean:.6g} +/- {mag.stderr:.2g} over {args.samples} samples")
    return 0


def cmd_bound(args) -> int:
    manifest = _Manifest("bound", args)
    out = _out_dir(args)
    model = load_model(args.model)
    report = bound_report(
        model, f_star_rnn=args.f_star_rnn, f_star_nmf=args.f_star_nmf
    )
    path = manifest.record(out / "bound.json")
    save_report(report, path)
    manifest.write(out)
    print(
        f"naive bound = {report.naive_bound:.6g}   general bound = {report.main_bound:.6g}"
        + (f"   exact F = {report.exact_f:.6g}" if report.exact_f is not None else "")
    )
    return 0


def cmd_nmf(args) -> int:
    manifest = _Manifest("nmf", args)
    out = _out_dir(args)
    model = load_model(args.model)
    cfg = _train_config(args)
    solution = nmf_minimize(model, cfg, seed=args.seed, restarts=args.restarts)
    path = manifest.record(out / "nmf.json")
    save_solution(solution, path)
    manifest.write(out)
    print(
        f"best F* = {solution.f_star:.6g}  mean-over-restarts = "
        f"{solution.f_star_restart_mean:.6g}  <x> = {solution.magnetization:.6g}"
    )
    return 0


# --- table1 -----------------------------------------------------------------

_ORDER_MODES = ("critical", "random", "inverse")


def _table_train_once(payload: dict) -> dict:
    """One (dataset, order mode, repeat) training run; process-pool safe."""
    model = generate(payload["dataset"], payload["dataset_seed"])
    mode = payload["mode"]
    run_seed = payload["run_seed"]
    if mode == "critical":
        order, _ = criticality_order(model)
    elif mode == "inverse":
        order = inverse_order(criticality_order(model)[0])
    else:
        order = random_order(model.n, seed=run_seed)
    cfg = TrainConfig(
        learning_rate=payload["lr"],
        batch_size=payload["batch"],
        iterations=payload["iterations"],
        anneal=AnnealSchedule(enabled=payload["anneal"]),
        seed=run_seed,
    )
    params, report = train(model, order, cfg)
    batch = sample(params, order, payload["eval_samples"], seed=run_seed + 1)
    mag = magnetization(batch)
    return {
        "dataset": payload["dataset"],
        "mode": mode,
        "repeat": payload["repeat"],
        "F": report.final_f,
        "F_best": report.best_f,
        "mag": mag.global_mean,
    }


def _aggregate(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def cmd_table1(args) -> int:
    manifest = _Manifest("table1", args)
    out = _out_dir(args)
    datasets = [name.strip() for name in args.datasets.split(",") if name.strip()]
    for name in datasets:
        if name not in CATALOG:
            raise ContractViolation(f"unknown dataset {name!r}")

    tasks = []
    for ds in datasets:
        for mode in _ORDER_MODES:
            for r in range(args.repeats):
                tasks.append(
                    {
                        "dataset": ds,
                        "dataset_seed": args.seed,
                        "mode": mode,
                        "repeat": r,
                        "run_seed": args.seed + 1000 * r + 7,
                        "iterations": args.iterations,
                        "batch": args.batch,
                        "lr": args.lr,
                        "anneal": args.anneal == "on",
                        "eval_samples": args.eval_samples,
                    }
                )
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_table_train_once, tasks))
    else:
        results = [_table_train_once(t) for t in tasks]

    rows = []
    label = {"critical": "rnn_critical", "random": "rnn_random", "inverse": "rnn_inverse"}
    for ds in datasets:
        model = generate(ds, args.seed)
        for mode in _ORDER_MODES:
            runs = [r for r in results if r["dataset"] == ds and r["mode"] == mode]
            f_mean, f_std = _aggregate([r["F"] for r in runs])
            m_mean, m_std = _aggregate([r["mag"] for r in runs])
            rows.append(
                {"dataset": ds, "method": label[mode], "F_mean": f_mean, "F_std": f_std,
                 "mag_mean": m_mean, "mag_std": m_std}
            )
        cfg = TrainConfig(
            learning_rate=args.lr, batch_size=args.batch,
            iterations=args.iterations, seed=args.seed,
        )
        nmf = nmf_minimize(model, cfg, restarts=args.nmf_repeats)
        f_mean, f_std = _aggregate(nmf.restart_f)
        m_mean, m_std = _aggregate(nmf.restart_magnetizations)
        rows.append({"dataset": ds, "method": "nmf", "F_mean": f_mean, "F_std": f_std,
                     "mag_mean": m_mean, "mag_std": m_std,
                     "F_best": nmf.f_star})
        gibbs = gibbs_sample(model, args.gibbs_samples, burn_in=1000,
                             thin=args.gibbs_thin, seed=args.seed)
        gm = magnetization(gibbs)
        gstd = float(gibbs.configurations.astype(float).mean(axis=1).std(ddof=1))
        rows.append({"dataset": ds, "method": "gibbs_reference", "F_mean": None,
                     "F_std": None, "mag_mean": gm.global_mean, "mag_std": gstd})
        if model.n <= 20:
            f_exact = exact_free_energy(model)
            mag_exact, _ = exact_magnetization(model)
            rows.append({"dataset": ds, "method": "exact", "F_mean": f_exact,
                         "F_std": 0.0, "mag_mean": mag_exact, "mag_std": 0.0})

    json_path = manifest.record(out / "table1.json")
    _write_json({"rows": rows, "runs": results}, json_path)
    csv_path = manifest.record(out / "table1.csv")
    with open(csv_path, "w") as fh:
        fh.write("dataset,method,F_mean,F_std,mag_mean,mag_std\n")
        for row in rows:
            fh.write(
                ",".join(
                    "" if row.get(k) is None else f"{row[k]:.17g}" if isinstance(row[k], float) else str(row[k])
                    for k in ("dataset", "method", "F_mean", "F_std", "mag_mean", "mag_std")
                )
                + "\n"
            )
    manifest.write(out)
    for row in rows:
        f_txt = "-" if row["F_mean"] is None else f"{row['F_mean']:.6g}"
        f_std = "" if not row.get("F_std") else f" +/- {row['F_std']:.3g}"
        print(f"{row['dataset']:16s} {row['method']:14s} F*={f_txt}{f_std}  "
              f"<x>={row['mag_mean']:.6g}")
    return 0


def cmd_report(args) -> int:
    from .report import load_report_csv, render_training_figures

    manifest = _Manifest("report", args)
    out = _out_dir(args)
    report = load_report_csv(args.train_report, args.spin_means)
    for fig in render_training_figures(report, out, args.stem, reference=args.reference):
        manifest.record(fig)
    manifest.write(out)
    print(f"figures written to {out}")
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="spinmf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, train_flags=False):
        p.add_argument("--out-dir", default=_env("OUT_DIR", "."), help="output directory")
        p.add_argument("--seed", type=int, default=_env("SEED", 0))
        if train_flags:
            p.add_argument("--iterations", type=int, default=_env("ITERATIONS", 10000))
            p.add_argument("--batch", type=int, default=_env("BATCH", 1000))
            p.add_argument("--lr", type=float, default=_env("LR", 0.001))
            p.add_argument("--anneal", choices=("on", "off"), default="on")

    p = sub.add_parser("gen", help="generate a catalog dataset")
    p.add_argument("--name", help="dataset name, or 'npp'")
    p.add_argument("--numbers", help="for npp: comma-separated positive numbers")
    p.add_argument("--out", help="output file name (default <name>.json)")
    p.add_argument("--list", action="store_true", help="list the catalog and exit")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("order", help="compute a spin order")
    p.add_argument("--model", required=True)
    p.add_argument("--order-mode", choices=_ORDER_MODES, default="critical")
    p.add_argument("--tie-break", choices=("index", "seeded"), default="index")
    common(p)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("train", help="train the recurrent mean field")
    p.add_argument("--model", required=True)
    p.add_argument("--order", help="order JSON (overrides --order-mode)")
    p.add_argument("--order-mode", choices=_ORDER_MODES, default="critical")
    p.add_argument("--tie-break", choices=("index", "seeded"), default="index")
    p.add_argument("--figures", action="store_true", help="render convergence figures")
    common(p, train_flags=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=10000)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("exact", help="exact log partition function and free energy")
    p.add_argument("--model", required=True)
    p.add_argument("--magnetization", action="store_true")
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("gibbs", help="Gibbs-sampled reference statistics")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--dump-samples", action="store_true")
    common(p)
    p.set_defaults(func=cmd_gibbs)

    p = sub.add_parser("bound", help="analytic error-bound report")
    p.add_argument("--model", required=True)
    p.add_argument("--f-star-rnn", type=float)
    p.add_argument("--f-star-nmf", type=float)
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("nmf", help="factorized mean-field baseline")
    p.add_argument("--model", required=True)
    p.add_argument("--restarts", type=int, default=10)
    common(p, train_flags=True)
    p.set_defaults(func=cmd_nmf)

    p = sub.add_parser("table1", help="full comparison table over datasets")
    p.add_argument("--datasets", required=True, help="comma-separated catalog names")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--nmf-repeats", type=int, default=10)
    p.add_argument("--eval-samples", type=int, default=10000)
    p.add_argument("--gibbs-samples", type=int, default=10000)
    p.add_argument("--gibbs-thin", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    common(p, train_flags=True)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("report", help="render figures from emitted CSVs")
    p.add_argument("--train-report", required=True)
    p.add_argument("--spin-means")
    p.add_argument("--stem", default="train")
    p.add_argument("--reference", type=float)
    common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    argv = sys.argv[1:] if argv is None else [str(a) for a in argv]
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except _UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except (ContractViolation, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return 1
    except NumericalAbort as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return 2
    except SizeGuardRefusal as exc:
        print(f"error: guard: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
