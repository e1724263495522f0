"""Batch entry point: gen, train, ablate, sensitivity, eval, tune, serve, replay.

Every command takes --seed and --out and is a pure function of its flags and
input files; outputs land under --out together with a manifest listing each
artifact's sha256.  Exit codes: 0 success, 1 validation problem, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import math
import pathlib
import sys
from dataclasses import asdict

import numpy as np

from .driver import (Budgets, DriverConfig, VARIANTS, _derive, ablation_suite,
                     from_run_config, replay, run, run_variant, to_run_config)
from .ga import GaConfig, tune
from .metrics import build_test_suite, evaluate
from .oracles import (DatasetOracle, ExpertSpec, SyntheticOracle,
                      SyntheticSurfaceSpec, surface_digest, write_dataset_csv)
from .space import ValidationError, encode, load_space, sample_uniform
from .svm import ComparatorModel, deserialize_model, serialize_model


class CliError(Exception):
    """Validation failure; exits 1."""


# -- plumbing -------------------------------------------------------------------

def _sha256(path: pathlib.Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _out_dir(args) -> pathlib.Path:
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: pathlib.Path, names: list[str]) -> None:
    manifest = {"artifacts": {n: _sha256(out / n) for n in sorted(names)}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _write_json(out: pathlib.Path, name: str, payload) -> str:
    (out / name).write_text(json.dumps(payload, indent=2, sort_keys=True))
    return name


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise CliError(f"expected comma-separated numbers, got {text!r}") from exc


def _space(args):
    try:
        return load_space(args.space)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from exc
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise CliError(f"malformed space file {args.space}: {exc}") from exc


def _surface_from_doc(doc: dict) -> SyntheticSurfaceSpec:
    return SyntheticSurfaceSpec(
        kind=doc["surface"],
        weights=tuple(doc["weights"]),
        optimum=tuple(doc["optimum"]),
        interaction_pairs=tuple(
            (int(a), int(b), float(c))
            for a, b, c in doc.get("interaction_pairs", ())),
        noise_sigma=doc.get("noise_sigma", 0.0),
        seed=doc.get("seed", 0),
    )


def _surfaces_from_file(path: str) -> list[SyntheticSurfaceSpec]:
    try:
        docs = json.loads(pathlib.Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read surfaces file {path}: {exc}") from exc
    if not isinstance(docs, list) or not docs:
        raise CliError("surfaces file must hold a non-empty JSON list")
    return [_surface_from_doc(d) for d in docs]


def _source_from_args(args, space):
    """--dataset wins; otherwise a synthetic surface from flags."""
    if getattr(args, "dataset", None):
        return DatasetOracle.from_csv(args.dataset, space)
    dim = len(space.parameters)
    weights = _csv_floats(args.weights) if args.weights else (1.0,) * dim
    optimum = _csv_floats(args.optimum) if args.optimum else (0.5,) * dim
    interactions = tuple(
        (int(a), int(b), float(c))
        for a, b, c in (part.split(":") for part in args.interactions.split(",") if part)
    ) if args.interactions else ()
    try:
        return SyntheticSurfaceSpec(
            kind=args.surface, weights=weights, optimum=optimum,
            interaction_pairs=interactions, noise_sigma=args.noise_sigma,
            seed=args.surface_seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _driver_config(args) -> DriverConfig:
    try:
        return DriverConfig(
            Q=args.Q, q=args.q, n=args.n, P=args.P, t=args.t,
            variant=args.variant.replace("-", "_"),
            seed=args.seed,
            initial_measured=args.initial_measured,
            pool_size=args.pool_size,
            grid_search=not args.no_grid_search,
            C=args.C, gamma=args.gamma,
            budgets=Budgets(),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _add_driver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--Q", type=int, default=200, help="expert label budget")
    p.add_argument("--q", type=int, default=10, help="labels per batch")
    p.add_argument("--n", type=int, default=3, help="clusters per query (k = q*n)")
    p.add_argument("--P", type=int, default=5, help="batches per self-training step")
    p.add_argument("--t", type=int, default=20, help="pseudolabels per step")
    p.add_argument("--initial-measured", type=int, default=20)
    p.add_argument("--pool-size", type=int, default=60)
    p.add_argument("--no-grid-search", action="store_true")
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)


def _add_surface_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--surface", default="quadratic_bowl",
                   choices=("quadratic_bowl", "interaction", "plateau_step"))
    p.add_argument("--weights", default=None, help="comma-separated, one per parameter")
    p.add_argument("--optimum", default=None,
                   help="comma-separated, in encoded [0,1] coordinates (default 0.5s)")
    p.add_argument("--interactions", default=None, help="i:j:coef,i:j:coef,...")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--surface-seed", type=int, default=0)


# -- commands -------------------------------------------------------------------

def cmd_gen(args) -> int:
    space = _space(args)
    source = _source_from_args(args, space)
    if isinstance(source, DatasetOracle):
        raise CliError("gen needs a synthetic surface, not --dataset")
    out = _out_dir(args)
    oracle = SyntheticOracle(source, space)
    configs = sample_uniform(space, args.count, seed=args.seed)
    if args.noiseless:
        perfs = [oracle.true_performance(c) for c in configs]
    else:
        perfs = [oracle.measure(c).performance for c in configs]
    write_dataset_csv(str(out / "dataset.csv"), space, configs, perfs)
    names = ["dataset.csv",
             _write_json(out, "source.json", {
                 "kind": "synthetic", "surface": source.kind,
                 "weights": list(source.weights), "optimum": list(source.optimum),
                 "interaction_pairs": [list(t) for t in source.interaction_pairs],
                 "noise_sigma": source.noise_sigma, "seed": source.seed,
                 "count": args.count, "sample_seed": args.seed,
                 "noiseless": bool(args.noiseless),
                 "digest": surface_digest(source)})]
    _write_manifest(out, names)
    print(f"wrote {args.count} measured configurations to {out / 'dataset.csv'}")
    return 0


def cmd_train(args) -> int:
    space = _space(args)
    source = _source_from_args(args, space)
    cfg = _driver_config(args)
    if not 0.5 <= args.expert_accuracy <= 1.0:
        raise CliError(f"--expert-accuracy {args.expert_accuracy} outside [0.5, 1]")
    expert = ExpertSpec(accuracy=args.expert_accuracy,
                        abstain_prob=args.abstain_prob,
                        seed=_derive(cfg.seed, "expert"))
    out = _out_dir(args)
    doc = to_run_config(space, source, cfg, expert)
    names = [_write_json(out, "run_config.json", doc)]

    result = run(space, source, cfg, expert_spec=expert)
    (out / "trace.jsonl").write_text(result.trace_jsonl())
    names.append("trace.jsonl")
    if isinstance(result.model, ComparatorModel):
        (out / "model.json").write_text(serialize_model(result.model))
        names.append("model.json")
    report = {
        "variant": cfg.variant,
        "labels_used": result.labels_used,
        "pseudolabels_added": result.pseudolabels_added,
        "pseudolabels_correct": result.pseudo_correct,
        "abstentions": result.abstentions,
        "iterations": result.iterations,
        "sim_cost_s": result.sim_cost,
        "flags": list(result.flags),
        "metrics": None if result.metrics is None else result.metrics.as_dict(),
    }
    names.append(_write_json(out, "metrics.json", report))
    _write_manifest(out, names)
    ca = "n/a" if result.metrics is None else f"{result.metrics.ca:.2f}"
    print(f"{cfg.variant}: {result.labels_used} expert labels, "
          f"{result.pseudolabels_added} pseudolabels, CA {ca}")
    return 0


def _run_cell(payload: bytes):
    """Worker for ablate/sensitivity fan-out; payload is a pickled spec."""
    import pickle

    key, doc, variant = pickle.loads(payload)
    space, source, cfg, expert = from_run_config(doc)
    result = run_variant(space, source, cfg, variant, expert_spec=expert)
    if result.metrics is None:
        raise RuntimeError("cell finished without held-out metrics")
    return key, result.metrics.ca


def _fan_out(cells: dict, workers: int) -> dict:
    """cells: key -> (doc, variant).  Returns key -> ca, merged by sorted key."""
    import pickle

    results: dict = {}
    if workers <= 1:
        for key in sorted(cells):
            doc, variant = cells[key]
            _, ca = _run_cell(pickle.dumps((key, doc, variant)))
            results[key] = ca
        return results
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_cell, pickle.dumps((key,) + cells[key]))
                   for key in sorted(cells)]
        for fut in concurrent.futures.as_completed(futures):
            key, ca = fut.result()
            results[key] = ca
    return results


def _seed_list(args) -> list[int]:
    if args.seeds < 2:
        raise CliError("--seeds must be >= 2 for averaged studies")
    return [_derive(args.seed, "study", i) % (2 ** 31) for i in range(args.seeds)]


def cmd_ablate(args) -> int:
    space = _space(args)
    surfaces = _surfaces_from_file(args.surfaces)
    variants = tuple(v.replace("-", "_") for v in args.variants.split(","))
    for v in variants:
        if v not in VARIANTS:
            raise CliError(f"unknown variant {v!r} (choose from {', '.join(VARIANTS)})")
    cfg = _driver_config(args)
    seeds = _seed_list(args)
    out = _out_dir(args)

    wanted = list(dict.fromkeys(list(variants) + ["passive_svm"]))
    cells = {}
    for surface in surfaces:
        for seed in seeds:
            fields = asdict(cfg)
            fields["budgets"] = cfg.budgets
            fields["seed"] = seed
            c = DriverConfig(**fields)
            expert = ExpertSpec(accuracy=args.expert_accuracy, abstain_prob=0.0,
                                seed=_derive(seed, "expert"))
            doc = to_run_config(space, surface, c, expert)
            for variant in wanted:
                cells[(surface_digest(surface), variant, seed)] = (doc, variant)
    memo = _fan_out(cells, args.workers)

    def runner(space_, surface, cfg_, variant, expert_spec=None, trainer=None):
        import types
        ca = memo[(surface_digest(surface), variant, cfg_.seed)]
        return types.SimpleNamespace(metrics=types.SimpleNamespace(ca=ca))

    table = ablation_suite(space, surfaces, seeds, cfg,
                           expert_accuracy=args.expert_accuracy,
                           variants=variants, session_runner=runner)
    names = [_write_json(out, "ablate.json", table)]
    with open(out / "table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["surface", "variant", "norm_ca_mean", "norm_ca_var"])
        for surface_name in sorted(table["per_surface"]):
            for variant in wanted:
                stats = table["per_surface"][surface_name][variant]
                writer.writerow([surface_name, variant, stats["mean"], stats["var"]])
        for variant in wanted:
            writer.writerow(["AVR", variant, table["avr"][variant], ""])
            writer.writerow(["VAR", variant, "", table["var"][variant]])
    names.append("table.csv")
    _write_manifest(out, names)
    ranked = sorted(table["avr"].items(), key=lambda kv: -kv[1])
    print("normalized CA, averaged over surfaces (best first):")
    for variant, avr in ranked:
        print(f"  {variant:12s} AVR {avr:.4f}  VAR {table['var'][variant]:.6f}")
    return 0


def cmd_sensitivity(args) -> int:
    space = _space(args)
    surfaces = _surfaces_from_file(args.surfaces)
    accuracies = _csv_floats(args.accuracies)
    for a in accuracies:
        if not 0.5 <= a <= 1.0:
            raise CliError(f"accuracy {a} outside [0.5, 1]")
    cfg = _driver_config(args)
    seeds = _seed_list(args)
    out = _out_dir(args)

    cells = {}
    for surface in surfaces:
        for acc in accuracies:
            for seed in seeds:
                fields = asdict(cfg)
                fields["budgets"] = cfg.budgets
                fields["seed"] = seed
                c = DriverConfig(**fields)
                expert = ExpertSpec(accuracy=acc, abstain_prob=0.0,
                                    seed=_derive(seed, "expert"))
                doc = to_run_config(space, surface, c, expert)
                cells[(surface_digest(surface), acc, seed)] = (doc, cfg.variant)
    memo = _fan_out(cells, args.workers)

    rows = []
    for surface in surfaces:
        name = f"{surface.kind}-{surface_digest(surface)}"
        for acc in accuracies:
            cas = [memo[(surface_digest(surface), acc, s)] for s in seeds]
            rows.append({
                "surface": name, "accuracy": acc,
                "ca_mean": float(np.mean(cas)),
                "ca_se": float(np.std(cas, ddof=1) / math.sqrt(len(cas))),
                "n_seeds": len(seeds),
            })
    with open(out / "sensitivity.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    names = ["sensitivity.csv",
             _write_json(out, "sensitivity.json",
                         {"rows": rows, "seeds": seeds, "variant": cfg.variant})]
    _write_manifest(out, names)
    for row in rows:
        print(f"{row['surface']:28s} accuracy {row['accuracy']:.2f} "
              f"CA {row['ca_mean']:6.2f} +- {row['ca_se']:.2f}")
    return 0


class _OracleComparator:
    """Decision function backed by true performance; for eval --oracle."""

    def __init__(self, space, oracle, configs):
        self._perf = {}
        for c in configs:
            self._perf[encode(space, c).tobytes()] = oracle.true_performance(c)

    def decision_many(self, X):
        X = np.asarray(X, dtype=np.float64)
        half = X.shape[1] // 2
        out = np.empty(len(X))
        for i, row in enumerate(X):
            left = self._perf[row[:half].tobytes()]
            right = self._perf[row[half:].tobytes()]
            out[i] = left - right
        return out


def cmd_eval(args) -> int:
    space = _space(args)
    source = _source_from_args(args, space)
    from .driver import make_oracle

    oracle = make_oracle(space, source, Budgets())
    suite = build_test_suite(oracle, space, N=args.suite_size, seed=args.seed)
    if args.oracle:
        model = _OracleComparator(space, oracle, suite.configs)
    else:
        if not args.model:
            raise CliError("eval needs --model or --oracle")
        try:
            model = deserialize_model(pathlib.Path(args.model).read_text())
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise CliError(f"cannot load model {args.model}: {exc}") from exc
    report = evaluate(model, suite, space)
    out = _out_dir(args)
    names = [_write_json(out, "metrics.json", report.as_dict())]
    _write_manifest(out, names)
    print(f"CA {report.ca:.2f}  RA {report.ra:.4f}  pairs {report.n_pairs}")
    return 0


def cmd_tune(args) -> int:
    space = _space(args)
    source = _source_from_args(args, space)
    from .driver import make_oracle

    oracle = make_oracle(space, source, Budgets())
    try:
        ga = GaConfig(population=args.population, generations=args.generations,
                      crossover_rate=args.crossover_rate,
                      mutation_rate=args.mutation_rate,
                      elitism=args.elitism, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if args.model:
        comparator = deserialize_model(pathlib.Path(args.model).read_text())
        result = tune(comparator, space, ga, oracle)
        mode = "comparator"
    else:
        result = tune(oracle, space, ga, oracle)
        mode = "oracle"
    out = _out_dir(args)
    names = [_write_json(out, "tune.json", {"mode": mode, **result.as_dict()})]
    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_fitness"])
        for stat in result.history:
            writer.writerow([stat.generation, stat.best_fitness])
    names.append("history.csv")
    _write_manifest(out, names)
    print(f"best ({mode} fitness): {result.decoded} -> "
          f"true performance {result.true_performance:.4f}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    data_dir = args.data_dir or str(pathlib.Path(args.out) / "sessions")
    print(f"serving sessions from {data_dir} on {args.host}:{args.port}")
    serve(data_dir, host=args.host, port=args.port)
    return 0


def cmd_replay(args) -> int:
    run_dir = pathlib.Path(args.run_dir)
    config_path = run_dir / "run_config.json"
    trace_path = run_dir / "trace.jsonl"
    if not trace_path.exists():
        trace_path = run_dir / "events.jsonl"
    if not config_path.exists() or not trace_path.exists():
        raise CliError(f"{run_dir} lacks run_config.json + trace.jsonl/events.jsonl")
    doc = json.loads(config_path.read_text())
    space, source, cfg, expert = from_run_config(doc)
    recorded = trace_path.read_text()
    events = [json.loads(line) for line in recorded.splitlines() if line]
    result = replay(space, source, cfg, events, expert_spec=expert)
    replica = result.trace_jsonl()
    ok = replica == recorded
    if args.out:
        out = _out_dir(args)
        names = [_write_json(out, "replay.json", {
            "run_dir": str(run_dir), "records": len(events), "match": ok})]
        _write_manifest(out, names)
    if not ok:
        print("replay DIVERGED from the recorded trace", file=sys.stderr)
        return 1
    print(f"replayed {len(events)} records; traces are byte-identical")
    return 0


# -- parser ---------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; bad flags are validation
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pairtune",
                     description="comparison-based performance modeling")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("gen", parents=[], help="sample and measure a dataset")
    p.add_argument("--space", required=True)
    _add_surface_flags(p)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--noiseless", action="store_true")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="run one labeling session against a simulated expert")
    p.add_argument("--space", required=True)
    p.add_argument("--dataset", default=None, help="measured CSV instead of a surface")
    _add_surface_flags(p)
    p.add_argument("--expert-accuracy", type=float, default=0.9)
    p.add_argument("--abstain-prob", type=float, default=0.0)
    p.add_argument("--variant", default="cm-casl",
                   choices=[v.replace("_", "-") for v in VARIANTS] + list(VARIANTS))
    _add_driver_flags(p)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="variant comparison table over surfaces x seeds")
    p.add_argument("--space", required=True)
    p.add_argument("--surfaces", required=True, help="JSON list of surface documents")
    p.add_argument("--variants", default=",".join(VARIANTS))
    p.add_argument("--expert-accuracy", type=float, default=0.9)
    p.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--variant", default="cm-casl", help=argparse.SUPPRESS)
    _add_driver_flags(p)
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sensitivity", help="CA vs expert accuracy sweep")
    p.add_argument("--space", required=True)
    p.add_argument("--surfaces", required=True)
    p.add_argument("--accuracies", default="0.7,0.8,0.9,1.0")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--variant", default="cm-casl",
                   choices=[v.replace("_", "-") for v in VARIANTS] + list(VARIANTS))
    _add_driver_flags(p)
    common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("eval", help="score a serialized comparator on a fresh suite")
    p.add_argument("--space", required=True)
    p.add_argument("--dataset", default=None)
    _add_surface_flags(p)
    p.add_argument("--model", default=None)
    p.add_argument("--oracle", action="store_true",
                   help="evaluate the perfect comparator instead of a model")
    p.add_argument("--suite-size", type=int, default=50)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune", help="genetic search driven by a comparator or oracle")
    p.add_argument("--space", required=True)
    p.add_argument("--dataset", default=None)
    _add_surface_flags(p)
    p.add_argument("--model", default=None)
    p.add_argument("--population", type=int, default=200)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--crossover-rate", type=float, default=0.5)
    p.add_argument("--mutation-rate", type=float, default=0.015)
    p.add_argument("--elitism", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("serve", help="run the labeling session HTTP service")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="refold a recorded session and verify the trace")
    p.add_argument("--run-dir", required=True,
                   help="directory with run_config.json and trace.jsonl/events.jsonl")
    common(p)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
