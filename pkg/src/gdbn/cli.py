"""Command-line front end: ``gdbn {generate,train,eval,bench,gradcheck}``.

Runs are driven by an INI file with optional sections ``[dataset]``,
``[model]``, ``[train]``, ``[eval]``, ``[baseline]`` and ``[bench]``.  Every
command writes a ``manifest.json`` next to its outputs recording the
resolved config, seeds, input/output SHA-256 digests and timing.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import asdict, fields

import numpy as np

from . import __version__, datagen, graph
from .baseline import LassoConfig
from .datagen import ConfigError, GenConfig
from .evaluation import DEFAULT_OMEGA, benchmark, evaluate
from .model import GdbnConfig, load_checkpoint, save_checkpoint
from .nn import AdamState
from .training import TrainConfig, train

SECTIONS = ("dataset", "model", "train", "eval", "baseline", "bench")
MANIFEST = "manifest.json"
CHECKPOINT = "checkpoint.npz"
OPTIMIZER = "optimizer.npz"
LOSSES = "losses.csv"
LEARNED = "learned.tam"
LOSS_COLUMNS = ("epoch", "total", "nelbo", "recon", "kl", "l1")
METRIC_COLUMNS = ("fdr", "tpr", "f1", "shd", "auroc")


class UsageError(Exception):
    pass


class DigestMismatch(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def read_config(path: str | None) -> dict[str, dict[str, str]]:
    if path is None:
        return {}
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    out = {}
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(name, f"unknown section [{name}]; expected one of {SECTIONS}")
        out[name] = dict(parser[name])
    return out


def _coerce(key: str, typ: str, raw):
    if typ.startswith("tuple"):
        items = raw if isinstance(raw, (list, tuple)) else [s.strip() for s in str(raw).split(",") if s.strip()]
        return tuple(items)
    if typ == "str":
        return str(raw)
    return datagen._coerce(key, typ, raw)


def build(cls, values: dict, section: str, **fixed):
    """Instantiate a config dataclass from string values, naming any bad key."""
    known = {f.name: f.type for f in fields(cls)}
    kwargs = dict(fixed)
    for key, raw in values.items():
        if key not in known or key in fixed:
            raise ConfigError(key, f"unknown option in [{section}]")
        kwargs[key] = _coerce(key, known[key], raw)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from None


def dataset_config(conf: dict, seed: int | None) -> GenConfig:
    values = dict(conf.get("dataset", {}))
    if seed is not None:
        values["seed"] = seed
    return GenConfig.from_mapping(values)


def model_config(conf: dict, m: int) -> GdbnConfig:
    return build(GdbnConfig, conf.get("model", {}), "model", m=m)


def train_config(conf: dict, seed: int | None) -> TrainConfig:
    values = dict(conf.get("train", {}))
    if seed is not None:
        values["seed"] = seed
    return build(TrainConfig, values, "train")


def lasso_config(conf: dict) -> LassoConfig:
    return build(LassoConfig, conf.get("baseline", {}), "baseline")


def eval_omega(conf: dict, flag: float | None) -> float:
    if flag is not None:
        omega = flag
    else:
        raw = conf.get("eval", {}).get("omega", DEFAULT_OMEGA)
        omega = datagen._coerce("omega", "float", raw)
    unknown = set(conf.get("eval", {})) - {"omega"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown option in [eval]")
    if omega < 0:
        raise ConfigError("omega", f"must be >= 0, got {omega}")
    return omega


# ---------------------------------------------------------------------------
# files and manifests
# ---------------------------------------------------------------------------

def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str, command: str, config: dict, seeds, inputs, outputs, seconds, summary) -> str:
    """``inputs``/``outputs`` are lists of paths; stored relative to ``out_dir`` when inside it."""
    def entry(p):
        rel = os.path.relpath(p, out_dir)
        return {"path": rel if not rel.startswith("..") else os.path.abspath(p), "sha256": file_digest(p)}

    doc = {
        "tool": "gdbn",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "command": command,
        "config": config,
        "seeds": list(seeds),
        "inputs": [entry(p) for p in inputs],
        "outputs": [entry(p) for p in outputs],
        "seconds": seconds,
        "summary": summary,
    }
    path = os.path.join(out_dir, MANIFEST)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def verify_manifest(directory: str) -> list[str]:
    """Check every output listed in ``directory``'s manifest; return the checked paths."""
    path = os.path.join(directory, MANIFEST)
    if not os.path.isfile(path):
        return []
    with open(path) as fh:
        doc = json.load(fh)
    checked = []
    for item in doc.get("outputs", []):
        p = item["path"] if os.path.isabs(item["path"]) else os.path.join(directory, item["path"])
        if not os.path.isfile(p):
            raise FileNotFoundError(f"file listed in {path} is missing: {p}")
        if file_digest(p) != item["sha256"]:
            raise DigestMismatch(f"digest mismatch for {p}: contents changed since {path} was written")
        checked.append(p)
    return checked


def write_csv(path: str, rows: list[dict], columns=None) -> str:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in columns})
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_loss_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (int(v) if k == "epoch" else float(v)) for k, v in row.items()} for row in csv.DictReader(fh)]


def _need_out(args) -> str:
    if not args.out:
        raise UsageError(f"{args.command} needs --out <dir>")
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    conf = read_config(args.config)
    cfg = dataset_config(conf, args.seed)
    out = _need_out(args)
    t0 = time.perf_counter()
    ds = datagen.generate(cfg)
    paths = datagen.save_dataset(ds, out)
    n_edges = int(np.count_nonzero(ds.ground_truth.weights))
    write_manifest(out, "generate", {"dataset": asdict(cfg)}, [cfg.seed],
                   [args.config] if args.config else [], list(paths.values()),
                   time.perf_counter() - t0, {"T": cfg.T, "m": cfg.m, "true_edges": n_edges})
    print(f"wrote {cfg.T}x{cfg.m} {cfg.mode} series with {n_edges} true edges to {out}")
    return 0


def _save_optimizer(path: str, opt: AdamState) -> None:
    arrays = {f"m{k}": a for k, a in enumerate(opt.m)}
    arrays.update({f"v{k}": a for k, a in enumerate(opt.v)})
    scalars = np.array([opt.lr, opt.beta1, opt.beta2, opt.eps, opt.step])
    with open(path, "wb") as fh:
        np.savez(fh, scalars=scalars, **arrays)


def _load_optimizer(path: str) -> AdamState:
    with np.load(path) as data:
        lr, b1, b2, eps, step = data["scalars"]
        n = sum(1 for k in data.files if k.startswith("m"))
        return AdamState(float(lr), float(b1), float(b2), float(eps), int(step),
                         [data[f"m{k}"].copy() for k in range(n)], [data[f"v{k}"].copy() for k in range(n)])


def cmd_train(args) -> int:
    if not args.data:
        raise UsageError("train needs --data <dataset dir>")
    conf = read_config(args.config)
    verify_manifest(args.data)
    ds = datagen.load_dataset(args.data)
    data_digest = file_digest(os.path.join(args.data, datagen.SERIES_FILE))
    gcfg = model_config(conf, ds.config.m)
    tcfg = train_config(conf, args.seed)
    out = _need_out(args)

    params = optimizer = None
    start_epoch = 0
    previous: list[dict] = []
    inputs = [os.path.join(args.data, f) for f in (datagen.SERIES_FILE, datagen.TRUTH_FILE, datagen.CONFIG_FILE)]
    if args.resume:
        ckpt = os.path.join(args.resume, CHECKPOINT)
        verify_manifest(args.resume)
        rcfg, params, meta = load_checkpoint(ckpt)
        if rcfg != gcfg:
            raise ConfigError("model", f"checkpoint config {rcfg.to_dict()} differs from requested {gcfg.to_dict()}")
        if meta.get("data_sha256") != data_digest:
            raise DigestMismatch("checkpoint was trained on a different dataset")
        optimizer = _load_optimizer(os.path.join(args.resume, OPTIMIZER))
        start_epoch = int(meta["epoch"])
        previous = read_loss_rows(os.path.join(args.resume, LOSSES))
        inputs += [ckpt, os.path.join(args.resume, OPTIMIZER)]
        if start_epoch >= tcfg.epochs:
            raise ConfigError("epochs", f"checkpoint is already at epoch {start_epoch}, asked for {tcfg.epochs}")
    if args.config:
        inputs.append(args.config)

    def progress(epoch, rep):
        if args.verbose:
            print(f"epoch {epoch:4d}  loss {rep.total[-1]:.4f}  recon {rep.recon[-1]:.4f}  kl {rep.kl[-1]:.4f}",
                  file=sys.stderr)

    t0 = time.perf_counter()
    rep = train(ds, gcfg, tcfg, params=params, optimizer=optimizer, start_epoch=start_epoch, callback=progress)
    end_epoch = rep.epochs_run or start_epoch
    rows = previous + rep.rows()
    learned = graph.TemporalAdjacencyMatrix(rep.A, gcfg.m, gcfg.s_o)
    paths = [
        write_csv(os.path.join(out, LOSSES), rows, LOSS_COLUMNS),
        os.path.join(out, LEARNED),
        os.path.join(out, CHECKPOINT),
        os.path.join(out, OPTIMIZER),
    ]
    graph.save(learned, paths[1])
    meta = {"epoch": end_epoch, "data_sha256": data_digest, "train": tcfg.to_dict()}
    save_checkpoint(paths[2], gcfg, rep.params, meta)
    _save_optimizer(paths[3], rep.optimizer)
    summary = {"epochs_run": end_epoch, "final_loss": rows[-1]["total"] if rows else None,
               "stopped_early": rep.stopped_early, "kl_collapsed": rep.kl_collapsed}
    write_manifest(out, "train", {"model": gcfg.to_dict(), "train": tcfg.to_dict()}, [tcfg.seed],
                   inputs, paths, time.perf_counter() - t0, summary)
    if rep.kl_collapsed:
        print("warning: KL term collapsed to ~0 while reconstruction did not improve", file=sys.stderr)
    print(f"trained to epoch {end_epoch} in {rep.seconds:.1f}s; final loss {summary['final_loss']}")
    return 0


def cmd_eval(args) -> int:
    if not args.learned or not args.truth:
        raise UsageError("eval needs --learned <tam> and --truth <tam>")
    conf = read_config(args.config)
    omega = eval_omega(conf, args.omega)
    learned = graph.load(args.learned, kind="tam")
    truth = graph.load(args.truth, kind="tam")
    if learned.m != truth.m:
        raise UsageError(f"learned TAM has m={learned.m} but truth has m={truth.m}")
    if truth.p > learned.p:
        raise UsageError(f"learned TAM covers lags 1..{learned.p}, truth needs up to {truth.p}")
    out = _need_out(args)
    t0 = time.perf_counter()
    rep = evaluate(learned, truth, omega)
    row = {**asdict(rep.counts), **rep.summary()}
    paths = [
        write_csv(os.path.join(out, "metrics.csv"), [row]),
        write_csv(os.path.join(out, "sweep.csv"), rep.sweep),
        os.path.join(out, "report.json"),
    ]
    with open(paths[2], "w") as fh:
        json.dump(rep.to_document(), fh, indent=2, default=_json_default)
        fh.write("\n")
    write_manifest(out, "eval", {"omega": omega}, [], [args.learned, args.truth] + ([args.config] if args.config else []),
                   paths, time.perf_counter() - t0, rep.summary())
    s = rep.summary()
    print(f"omega={omega}  fdr={s['fdr']:.3f}  tpr={s['tpr']:.3f}  f1={s['f1']:.3f}  shd={s['shd']}  "
          f"auroc={s['auroc']:.3f}  (best f1 {s['best_f1']:.3f} at omega={s['best_omega']})")
    return 0


def parse_list(raw: str, cast=str) -> list:
    """Comma list; integer items also accept ``a-b`` ranges."""
    items = []
    for part in str(raw).split(","):
        part = part.strip()
        if not part:
            continue
        if cast is int and "-" in part[1:]:
            lo, hi = part.split("-", 1)
            items.extend(range(int(lo), int(hi) + 1))
        else:
            items.append(cast(part))
    return items


BENCH_KEYS = {"modes", "ms", "seeds", "methods", "preset"}


def bench_cells(conf: dict, seed: int | None) -> tuple[list[GenConfig], list[str], list[int], list[str]]:
    b = conf.get("bench", {})
    unknown = set(b) - BENCH_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown option in [bench]")
    try:
        modes = parse_list(b.get("modes", "nl_outer,nl_inner"))
        ms = parse_list(b.get("ms", "10"), int)
        seeds = [seed] if seed is not None else parse_list(b.get("seeds", "0-4"), int)
    except ValueError as exc:
        raise ConfigError("bench", str(exc)) from None
    methods = parse_list(b.get("methods", "gdbn,var_lasso"))
    preset = b.get("preset", "benchmark")
    if preset not in ("benchmark", "dataset"):
        raise ConfigError("preset", f"must be 'benchmark' or 'dataset', got {preset!r}")
    for method in methods:
        if method not in ("gdbn", "var_lasso"):
            raise ConfigError("methods", f"unknown method {method!r}")
    if not (modes and ms and seeds and methods):
        raise ConfigError("bench", "modes, ms, seeds and methods must be non-empty")
    types = {f.name: f.type for f in fields(GenConfig)}
    base = {}
    for k, v in conf.get("dataset", {}).items():
        if k not in types or k in ("mode", "m"):
            raise ConfigError(k, "unknown or grid-controlled option in [dataset]")
        base[k] = _coerce(k, types[k], v)
    configs, names = [], []
    for mode in modes:
        for m in ms:
            if preset == "benchmark":
                cfg = datagen.benchmark_config(mode, m, **{"seed": 0, **base})
            else:
                cfg = GenConfig(**{**base, "mode": mode, "m": m})
            configs.append(cfg)
            names.append(f"{mode}_m{m}")
    return configs, names, seeds, methods


def render_table(aggs, names, methods) -> str:
    """Text table with one row per method and FDR/TPR/F1/SHD/AUC per cell."""
    by = {(a.cell, a.method): a for a in aggs}
    head = ["method"] + [f"{n}:{k}" for n in names for k in METRIC_COLUMNS]
    lines = [" | ".join(head)]
    for method in methods:
        cells = [method]
        for n in names:
            a = by.get((n, method))
            for k in METRIC_COLUMNS:
                if a is None or k not in a.mean:
                    cells.append("failed")
                else:
                    cells.append(f"{a.mean[k]:.3f} ± {a.std[k]:.3f}")
        lines.append(" | ".join(cells))
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    conf = read_config(args.config)
    configs, names, seeds, methods = bench_cells(conf, args.seed)
    first_m = configs[0].m
    model_config(conf, first_m)  # validate before any work
    tcfg = train_config(conf, None)
    lcfg = lasso_config(conf)
    omega = eval_omega(conf, args.omega)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    out = _need_out(args)
    model = {k: _coerce(k, {f.name: f.type for f in fields(GdbnConfig)}[k], v)
             for k, v in conf.get("model", {}).items()}

    t0 = time.perf_counter()
    results, aggs = benchmark(configs, seeds, methods, model=model, train_config=tcfg, lasso_config=lcfg,
                              omega=omega, jobs=args.jobs, names=names)
    outputs = []
    for r in results:
        run_dir = os.path.join(out, "runs", r.cell, f"seed{r.seed}", r.method)
        os.makedirs(run_dir, exist_ok=True)
        if r.truth is not None:
            outputs.append(os.path.join(run_dir, "truth.tam"))
            graph.save(r.truth, outputs[-1])
        if r.learned is not None:
            outputs.append(os.path.join(run_dir, LEARNED))
            graph.save(graph.TemporalAdjacencyMatrix(r.learned, r.m, r.learned.shape[1] // r.m), outputs[-1])
        if r.losses:
            outputs.append(write_csv(os.path.join(run_dir, LOSSES),
                                     [{"epoch": k + 1, "total": v} for k, v in enumerate(r.losses)]))
    run_cols = ["cell", "mode", "m", "seed", "method", *METRIC_COLUMNS, "omega", "best_omega", "best_f1",
                "seconds", "data_sha256", "error"]
    outputs.append(write_csv(os.path.join(out, "runs.csv"),
                             [{**r.row(), "data_sha256": r.data_digest or ""} for r in results], run_cols))
    summary_rows = []
    for a in aggs:
        row = {"cell": a.cell, "method": a.method, "n_runs": a.n_runs, "n_failed": a.n_failed}
        for k in METRIC_COLUMNS:
            row[f"{k}_mean"] = a.mean.get(k, "")
            row[f"{k}_std"] = a.std.get(k, "")
        summary_rows.append(row)
    outputs.append(write_csv(os.path.join(out, "summary.csv"), summary_rows,
                             ["cell", "method", "n_runs", "n_failed"]
                             + [f"{k}_{s}" for k in METRIC_COLUMNS for s in ("mean", "std")]))
    table = render_table(aggs, names, methods)
    outputs.append(os.path.join(out, "table.txt"))
    with open(outputs[-1], "w") as fh:
        fh.write(table)
    n_failed = sum(r.error is not None for r in results)
    write_manifest(out, "bench",
                   {"cells": [asdict(c) for c in configs], "names": names, "methods": methods, "model": model,
                    "train": tcfg.to_dict(), "baseline": asdict(lcfg), "omega": omega},
                   seeds, [args.config] if args.config else [], outputs, time.perf_counter() - t0,
                   {"runs": len(results), "failed": n_failed, "summary": summary_rows})
    print(table, end="")
    if n_failed:
        print(f"{n_failed} of {len(results)} runs failed; see runs.csv", file=sys.stderr)
        return 2
    return 0


def gradcheck_suite(seed: int = 0, tolerance: float = 1e-4) -> list[dict]:
    """Finite-difference check of every primitive and of the full objective on a tiny model."""
    from . import tensor as T
    from .model import init_params
    from .nn import finite_difference_check
    from .training import total_objective

    rng = np.random.default_rng(seed)
    rows = []

    def record(name, fn, params):
        rep = finite_difference_check(fn, params, tolerance=tolerance)
        rows.append({"check": name, "max_error": rep.max_error, "passed": rep.passed})

    a = T.tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = T.tensor(rng.normal(size=(4, 2)), requires_grad=True)
    c = T.tensor(rng.uniform(0.5, 2.0, size=(3, 4)), requires_grad=True)
    w = rng.normal(size=(3, 4))
    unary = {
        "sin": T.sin, "cos": T.cos, "tanh": T.tanh, "exp": T.exp, "square": T.square,
        "relu": T.relu, "abs": T.abs, "clip": lambda x: T.clip(x, -0.5, 0.5),
    }
    for name, op in unary.items():
        record(name, lambda op=op: T.sum(T.mul(op(a), w)), [a])
    record("log", lambda: T.sum(T.mul(T.log(c), w)), [c])
    record("matmul", lambda: T.sum(T.square(T.matmul(a, b))), [a, b])
    record("mul_broadcast", lambda: T.sum(T.mul(a, b[:, :1].reshape(1, 4))), [a, b])
    record("concat_slice", lambda: T.sum(T.square(T.concat([a, c], axis=-1)[:, 2:6])), [a, c])

    cfg = GdbnConfig(m=3, s_o=4, s_p=2, d_z=2, hidden=4)
    params = init_params(cfg, rng)
    windows = rng.normal(size=(4, cfg.s_o + cfg.s_p, cfg.m))
    tcfg = TrainConfig(lam=0.01)
    named = params.named_parameters()
    rep = finite_difference_check(lambda: total_objective(windows, params, cfg, tcfg, np.random.default_rng(seed + 1))[0],
                                  [p for _, p in named], tolerance=tolerance, names=[n for n, _ in named])
    for name, err in zip(rep.names, rep.errors):
        rows.append({"check": f"objective:{name}", "max_error": err, "passed": err < tolerance})
    return rows


def cmd_gradcheck(args) -> int:
    t0 = time.perf_counter()
    rows = gradcheck_suite(seed=args.seed or 0)
    worst = max(rows, key=lambda r: r["max_error"])
    for r in rows:
        print(f"{'ok  ' if r['passed'] else 'FAIL'} {r['check']:<28s} {r['max_error']:.2e}")
    ok = all(r["passed"] for r in rows)
    if args.out:
        out = _need_out(args)
        path = write_csv(os.path.join(out, "gradcheck.csv"), rows, ["check", "max_error", "passed"])
        write_manifest(out, "gradcheck", {}, [args.seed or 0], [], [path], time.perf_counter() - t0,
                       {"passed": ok, "max_error": worst["max_error"]})
    print(f"{'passed' if ok else 'FAILED'}: max relative error {worst['max_error']:.2e} ({worst['check']})")
    return 0 if ok else 2


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [dataset]/[model]/[train]/[eval]/[baseline]/[bench]")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="override every seed in the config")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gdbn", description="Temporal causal discovery with GDBN.")
    p.add_argument("--version", action="version", version=f"gdbn {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="simulate a dataset with a known TAM")
    t = sub.add_parser("train", parents=[common], help="fit GDBN to a generated dataset")
    t.add_argument("--data", help="dataset directory written by 'generate'")
    t.add_argument("--resume", help="previous 'train' output directory to continue from")
    e = sub.add_parser("eval", parents=[common], help="score a learned TAM against the truth")
    e.add_argument("--learned", help="learned TAM file")
    e.add_argument("--truth", help="ground-truth TAM file")
    e.add_argument("--omega", type=float, help=f"edge threshold (default {DEFAULT_OMEGA})")
    b = sub.add_parser("bench", parents=[common], help="multi-seed benchmark grid")
    b.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    b.add_argument("--omega", type=float, help=f"edge threshold (default {DEFAULT_OMEGA})")
    sub.add_parser("gradcheck", parents=[common], help="finite-difference check of the autodiff engine")
    return p


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "eval": cmd_eval, "bench": cmd_bench,
            "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("gdbn: error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, FileNotFoundError, graph.ParseError) as exc:
        print(f"gdbn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"gdbn {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
