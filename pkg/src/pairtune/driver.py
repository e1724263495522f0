"""Session orchestration: batch active learning with periodic self-training.

The session core is a generator (:func:`drive`) that yields query batches and
receives expert answers.  The same code path therefore serves the in-process
simulated-expert runner, an HTTP service that suspends between requests, and
log refolding, where answers recorded earlier are fed back in.  Every random
choice flows from the session seed; measurement noise flows from the oracle's
own seed; expert behavior stays outside the generator entirely.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from typing import Callable, Generator, Sequence

import numpy as np

from . import svm
from .active import QueryConfig, select_queries
from .metrics import MetricsReport, build_test_suite, evaluate, suite_ca
from .oracles import (
    DatasetOracle,
    ExpertAnswer,
    ExpertSpec,
    SimulatedExpert,
    SyntheticOracle,
    SyntheticSurfaceSpec,
    label_from_measurements,
    surface_digest,
)
from .pairs import PairDataset, PairSample, augment_swaps, build_pairs
from .pseudolabel import LabelHistory, SslConfig, assign_pseudolabels
from .space import ConfigSpace, Configuration, sample_uniform, space_from_json, space_to_json

VARIANTS = ("cm_casl", "al_ir", "al_i", "ssl_only", "assl_h", "passive_svm")


class BudgetExceededError(RuntimeError):
    """Initial measurements alone would not fit in the time budget."""


@dataclass(frozen=True)
class Budgets:
    time_constraint_s: float = math.inf
    measurement_cost_s: float = 60.0
    label_cost_s: float = 30.0

    def __post_init__(self) -> None:
        if self.measurement_cost_s < 0 or self.label_cost_s < 0:
            raise ValueError("costs must be nonnegative")


@dataclass(frozen=True)
class DriverConfig:
    Q: int = 200
    q: int = 10
    n: int = 3
    P: int = 5
    t: int = 20
    variant: str = "cm_casl"
    seed: int = 0
    initial_measured: int = 20
    pool_size: int = 60
    grid_search: bool = True
    folds: int = 3
    C: float | None = None
    gamma: float | None = None
    kernel_kind: str = "rbf"
    kmeans_max_iter: int = 100
    suite_size: int = 50
    budgets: Budgets = Budgets()

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.q < 1 or self.Q < self.q:
            raise ValueError("need Q >= q >= 1")
        if self.n < 1 or self.P < 1:
            raise ValueError("n and P must be >= 1")
        if self.t < 2 or self.t % 2:
            raise ValueError("t must be a positive even integer")
        if self.initial_measured < 2:
            raise ValueError("initial_measured must be >= 2")
        if self.pool_size <= self.initial_measured:
            raise ValueError("pool must be larger than the initial measured set")

    def schedule(self) -> tuple[int, int, int]:
        """(AL iterations M, SSL steps T, tail AL batches)."""
        M = self.Q // self.q
        if self.variant in ("cm_casl", "assl_h", "ssl_only"):
            T = M // self.P
        else:
            T = 0
        return M, T, M - self.P * T if self.variant in ("cm_casl", "assl_h") else 0


def _derive(seed: int, *path) -> int:
    digest = hashlib.sha256(repr((int(seed),) + path).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def initial_measured_for_ratio(ratio: float, budgets: Budgets) -> int:
    """Configs measurable when a fraction ``ratio`` of the budget buys measurements."""
    if not (0 < ratio < 1):
        raise ValueError("ratio must be in (0, 1)")
    if not math.isfinite(budgets.time_constraint_s):
        raise ValueError("selection ratio needs a finite time constraint")
    return int(ratio * budgets.time_constraint_s // budgets.measurement_cost_s)


def config_from_selection_ratio(base: DriverConfig, ratio: float) -> DriverConfig:
    """Split the time budget: ``ratio`` on measurements, the rest on labels."""
    measured = initial_measured_for_ratio(ratio, base.budgets)
    label_budget = (1.0 - ratio) * base.budgets.time_constraint_s
    Q = int(label_budget // base.budgets.label_cost_s)
    fields = asdict(base)
    fields["budgets"] = base.budgets
    fields["initial_measured"] = max(2, measured)
    fields["Q"] = max(base.q, Q)
    return DriverConfig(**fields)


@dataclass(frozen=True)
class QueryBatch:
    """One batch of pairs awaiting expert labels."""

    iteration: int
    kind: str
    query_ids: tuple[str, ...]
    pairs: tuple[PairSample, ...]
    endpoints: dict[int, Configuration]
    labels_used: int
    budget: int


@dataclass(frozen=True)
class MajorityStub:
    """Constant fallback comparator for degenerate training sets."""

    vote: int

    def decision_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.full(len(X), 1.0 if self.vote == 1 else -1.0)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_many(X) > 0).astype(np.int64)

    def decision(self, features) -> float:
        return float(self.decision_many(features)[0])

    def predict(self, features) -> int:
        return int(self.decision(features) > 0)


def model_digest(model) -> str:
    if isinstance(model, svm.ComparatorModel):
        return hashlib.sha256(svm.serialize_model(model).encode()).hexdigest()[:16]
    if isinstance(model, MajorityStub):
        return f"stub{model.vote}"
    if hasattr(model, "weights"):
        raw = b"lsq" + np.asarray(model.weights, dtype=np.float64).tobytes() \
            + repr(float(model.intercept)).encode()
        return hashlib.sha256(raw).hexdigest()[:16]
    return hashlib.sha256(repr(model).encode()).hexdigest()[:16]


@dataclass
class SessionResult:
    model: object
    trace: tuple[dict, ...]
    labels_used: int
    pseudolabels_added: int
    pseudo_correct: int
    abstentions: int
    iterations: int
    sim_cost: float
    flags: tuple[str, ...]
    metrics: MetricsReport | None

    def trace_jsonl(self) -> str:
        from . import events as ev
        return ev.to_jsonl(self.trace)


def make_oracle(space: ConfigSpace, source, budgets: Budgets):
    if isinstance(source, SyntheticSurfaceSpec):
        return SyntheticOracle(source, space,
                               measurement_cost=budgets.measurement_cost_s)
    if isinstance(source, DatasetOracle):
        return source
    raise TypeError(f"unsupported session source {type(source).__name__}")


def _source_descriptor(source) -> dict:
    if isinstance(source, SyntheticSurfaceSpec):
        return {"kind": "synthetic", "surface": source.kind,
                "digest": surface_digest(source)}
    return {"kind": "dataset", "configs": len(source.configs)}


def drive(space: ConfigSpace, source, cfg: DriverConfig,
          expert_spec: ExpertSpec | None = None,
          trainer: Callable[[Sequence[PairSample], int], object] | None = None,
          sink: Callable[[dict], None] | None = None,
          ) -> Generator[QueryBatch, Sequence[ExpertAnswer], SessionResult]:
    """Run one session, yielding query batches and receiving answers.

    The caller owns the expert: each yielded batch must be answered with one
    ExpertAnswer per pair (abstentions allowed; the driver resolves them by
    measuring both endpoints).  Returns a SessionResult when the budget is
    spent.
    """
    oracle = make_oracle(space, source, cfg.budgets)
    budgets = cfg.budgets
    initial_cost = cfg.initial_measured * budgets.measurement_cost_s
    if initial_cost > budgets.time_constraint_s:
        raise BudgetExceededError(
            f"{cfg.initial_measured} measurements cost {initial_cost:.0f}s, "
            f"budget is {budgets.time_constraint_s:.0f}s")

    trace: list[dict] = []
    flags: set[str] = set()

    def emit(event: dict) -> None:
        trace.append(event)
        if sink is not None:
            sink(event)

    if isinstance(oracle, DatasetOracle):
        pool = list(oracle.configs)
        if len(pool) > cfg.pool_size:
            # leave the rest of the dataset for the held-out suite
            keep = np.random.default_rng(_derive(cfg.seed, "pool"))
            idx = sorted(keep.choice(len(pool), size=cfg.pool_size,
                                     replace=False).tolist())
            pool = [pool[i] for i in idx]
        if cfg.initial_measured >= len(pool):
            raise ValueError("dataset smaller than the initial measured set")
    else:
        pool = sample_uniform(space, cfg.pool_size, seed=_derive(cfg.seed, "pool"))
    by_id = {c.id: c for c in pool}

    # the held-out suite is fixed by (oracle, space, seed, pool), so build it up
    # front: every retrain reports CA on it and the final metrics reuse it
    suite_seed: int | None = _derive(cfg.seed, "suite")
    try:
        heldout = build_test_suite(oracle, space, N=cfg.suite_size,
                                   seed=suite_seed, exclude=pool)
    except ValueError:
        heldout = None
        suite_seed = None
        flags.add("no_heldout_suite")

    pick = np.random.default_rng(_derive(cfg.seed, "initial"))
    initial_idx = sorted(pick.choice(len(pool), size=cfg.initial_measured,
                                     replace=False).tolist())
    initial = [pool[i] for i in initial_idx]

    emit({
        "event": "created",
        "variant": cfg.variant,
        "seed": cfg.seed,
        "Q": cfg.Q, "q": cfg.q, "n": cfg.n, "P": cfg.P, "t": cfg.t,
        "initial_measured": cfg.initial_measured,
        "pool_size": len(pool),
        "grid_search": cfg.grid_search,
        "space_digest": space.digest(),
        "source": _source_descriptor(source),
        "expert": None if expert_spec is None else {
            "accuracy": expert_spec.accuracy,
            "abstain_prob": expert_spec.abstain_prob,
            "seed": expert_spec.seed,
        },
        "trainer": "svm" if trainer is None else "custom",
        "initial_ids": [c.id for c in initial],
    })

    sim_time = 0.0
    measurements: dict[int, float] = {}
    for config in initial:
        m = oracle.measure(config)
        sim_time += m.wall_cost
        measurements[config.id] = m.performance
        emit({"event": "measured", "config_id": config.id,
              "performance": m.performance, "reason": "initial",
              "cost": m.wall_cost, "sim_time": sim_time})

    ds = build_pairs(space, pool, measurements)
    labels_used = 0
    abstentions = 0
    pseudo_added = 0
    pseudo_correct = 0
    iteration = 0
    model: object | None = None
    session_C: float | None = cfg.C
    session_gamma: float | None = cfg.gamma

    def majority_vote() -> int:
        ones = sum(1 for p in ds.labeled if p.label == 1)
        return 1 if ones > len(ds.labeled) - ones else 0

    def train(reason: str) -> None:
        nonlocal model, session_C, session_gamma
        samples = sorted(augment_swaps(ds).labeled, key=lambda p: p.key)
        degenerate = False
        if trainer is not None:
            try:
                model = trainer(samples, cfg.seed)
            except svm.DegenerateTrainingError:
                degenerate = True
        else:
            dim = space.encoded_dim * 2
            try:
                if session_C is None and cfg.grid_search:
                    fitted = svm.grid_search_fit(
                        samples, cfg.folds,
                        C_grid=(1.0, 10.0, 100.0),
                        gamma_grid=(0.5 / dim, 1.0 / dim, 2.0 / dim),
                        seed=_derive(cfg.seed, "grid"),
                        kernel_kind=cfg.kernel_kind)
                    session_C = fitted.C
                    session_gamma = fitted.kernel.gamma
                    model = fitted
                else:
                    C = session_C if session_C is not None else svm.DEFAULT_C
                    gamma = session_gamma if session_gamma is not None else 1.0 / dim
                    kernel = (svm.KernelSpec("linear") if cfg.kernel_kind == "linear"
                              else svm.KernelSpec("rbf", gamma))
                    model = svm.fit(samples, kernel, C=C, seed=cfg.seed)
                    session_C, session_gamma = C, kernel.gamma
            except svm.DegenerateTrainingError:
                degenerate = True
        if degenerate:
            flags.add("degenerate_training")
            if model is None:
                model = MajorityStub(vote=majority_vote())
        emit({
            "event": "retrained",
            "iteration": iteration,
            "reason": reason,
            "degenerate": degenerate,
            "train_size": len(samples),
            "C": session_C if trainer is None else None,
            "gamma": session_gamma if trainer is None else None,
            "svs": len(model.dual_coefs) if isinstance(model, svm.ComparatorModel) else None,
            "model_digest": model_digest(model),
            "suite_ca": None if heldout is None else suite_ca(model, heldout, space),
        })

    def ask(kind: str, queries: list[PairSample], uncertainty: list[float] | None):
        nonlocal labels_used, abstentions, sim_time
        query_ids = tuple(f"it{iteration:04d}-p{i}" for i in range(len(queries)))
        endpoints = {}
        for p in queries:
            endpoints[p.left_id] = by_id[p.left_id]
            endpoints[p.right_id] = by_id[p.right_id]
        emit({
            "event": "queried",
            "iteration": iteration,
            "kind": kind,
            "query_ids": list(query_ids),
            "pairs": [[p.left_id, p.right_id] for p in queries],
            "uncertainty": uncertainty,
            "sim_time": sim_time,
        })
        answers = yield QueryBatch(
            iteration=iteration, kind=kind, query_ids=query_ids,
            pairs=tuple(queries), endpoints=endpoints,
            labels_used=labels_used, budget=cfg.Q)
        if len(answers) != len(queries):
            raise ValueError(
                f"batch {iteration} needs {len(queries)} answers, got {len(answers)}")
        labels = []
        logged = []
        for p, ans in zip(queries, answers):
            if ans.abstained or ans.label is None:
                ml = oracle.measure(by_id[p.left_id])
                mr = oracle.measure(by_id[p.right_id])
                sim_time += ml.wall_cost + mr.wall_cost
                abstentions += 1
                emit({"event": "measured", "config_id": p.left_id,
                      "performance": ml.performance, "reason": "abstention",
                      "cost": ml.wall_cost, "sim_time": sim_time})
                emit({"event": "measured", "config_id": p.right_id,
                      "performance": mr.performance, "reason": "abstention",
                      "cost": mr.wall_cost, "sim_time": sim_time})
                label = label_from_measurements(ml.performance, mr.performance)
                abstained = True
            else:
                if ans.label not in (0, 1):
                    raise ValueError(f"labels must be 0/1, got {ans.label!r}")
                label = int(ans.label)
                abstained = False
            labels.append(label)
            logged.append({"query_id": query_ids[len(logged)],
                           "left": p.left_id, "right": p.right_id,
                           "label": label, "abstained": abstained})
        ds.transfer(queries, labels, source="expert")
        labels_used += len(queries)
        sim_time += len(queries) * budgets.label_cost_s
        emit({"event": "labeled", "iteration": iteration, "answers": logged,
              "labels_used": labels_used, "sim_time": sim_time})

    def clustered_queries() -> tuple[list[PairSample], list[float]]:
        qcfg = QueryConfig(q=cfg.q, n=cfg.n, kmeans_max_iter=cfg.kmeans_max_iter,
                           seed=_derive(cfg.seed, "kmeans", iteration))
        queries = select_queries(model, ds.unlabeled, qcfg)
        dec = model.decision_many(np.asarray([p.features for p in queries]))
        return queries, [abs(float(d)) for d in dec]

    def plain_uncertainty_queries() -> tuple[list[PairSample], list[float]]:
        X = ds.unlabeled_features()
        dec = np.abs(model.decision_many(X))
        ranked = sorted(
            range(len(dec)),
            key=lambda i: (dec[i], ds.unlabeled[i].left_id, ds.unlabeled[i].right_id))
        chosen = ranked[:cfg.q]
        return [ds.unlabeled[i] for i in chosen], [float(dec[i]) for i in chosen]

    def truth_label(p: PairSample) -> int:
        return label_from_measurements(
            oracle.true_performance(by_id[p.left_id]),
            oracle.true_performance(by_id[p.right_id]))

    def apply_pseudolabels(chosen: Sequence[PairSample], labels: Sequence[int],
                           step: int, extra: dict) -> None:
        nonlocal pseudo_added, pseudo_correct
        correct = sum(1 for p, lab in zip(chosen, labels) if truth_label(p) == lab)
        if chosen:
            ds.transfer(list(chosen), list(labels), source="pseudo")
            pseudo_added += len(chosen)
            pseudo_correct += correct
        emit({"event": "pseudolabeled", "step": step, "iteration": iteration,
              "added": [[p.left_id, p.right_id, int(lab)]
                        for p, lab in zip(chosen, labels)],
              "correct": correct, "sim_time": sim_time, **extra})

    M, T, tail = cfg.schedule()
    rule = "farthest" if cfg.variant == "assl_h" else "median"

    if cfg.variant == "passive_svm":
        rng = np.random.default_rng(_derive(cfg.seed, "passive"))
        while labels_used + cfg.q <= cfg.Q and ds.unlabeled:
            iteration += 1
            take = min(cfg.q, len(ds.unlabeled))
            idx = sorted(rng.choice(len(ds.unlabeled), size=take, replace=False).tolist())
            yield from ask("passive", [ds.unlabeled[i] for i in idx], None)
        train("final")
    elif cfg.variant in ("al_ir", "al_i"):
        train("initial")
        picker = clustered_queries if cfg.variant == "al_ir" else plain_uncertainty_queries
        while labels_used + cfg.q <= cfg.Q and ds.unlabeled:
            iteration += 1
            queries, unc = picker()
            yield from ask("al", queries, unc)
            train("al")
    elif cfg.variant == "ssl_only":
        train("initial")
        for step in range(1, T + 1):
            if not ds.unlabeled:
                flags.add("pool_exhausted")
                break
            X = ds.unlabeled_features()
            dec = model.decision_many(X)
            ranked = sorted(
                range(len(dec)),
                key=lambda i: (-abs(dec[i]), ds.unlabeled[i].left_id,
                               ds.unlabeled[i].right_id))
            chosen_idx = ranked[:cfg.t]
            chosen = [ds.unlabeled[i] for i in chosen_idx]
            labels = [int(dec[i] > 0) for i in chosen_idx]
            positives = sum(labels)
            apply_pseudolabels(chosen, labels, step, {
                "s_p": int((dec > 0).sum()), "s_n": int((dec <= 0).sum()),
                "r_p": positives, "r_n": len(labels) - positives,
                "distances": [abs(float(dec[i])) for i in chosen_idx]})
            train("ssl")
    else:  # cm_casl / assl_h
        train("initial")
        history = LabelHistory(P=cfg.P)
        ssl_cfg = SslConfig(P=cfg.P, t=cfg.t)
        for step in range(1, T + 1):
            history.reset()
            history.record(model, ds.unlabeled)
            for _ in range(cfg.P):
                if not ds.unlabeled:
                    flags.add("pool_exhausted")
                    break
                iteration += 1
                queries, unc = clustered_queries()
                yield from ask("al", queries, unc)
                train("al")
                history.record(model, ds.unlabeled)
            sel = assign_pseudolabels(model, ds.unlabeled, history, ssl_cfg, rule=rule)
            chosen = list(sel.x_p) + list(sel.x_n)
            labels = [1] * len(sel.x_p) + [0] * len(sel.x_n)
            apply_pseudolabels(chosen, labels, step, {
                "s_p": sel.s_p, "s_n": sel.s_n, "r_p": sel.r_p, "r_n": sel.r_n,
                "distances": list(sel.chosen_distances)})
            if chosen:
                train("ssl")
        while labels_used + cfg.q <= cfg.Q and ds.unlabeled:
            iteration += 1
            queries, unc = clustered_queries()
            yield from ask("al", queries, unc)
            train("al")

    if not ds.unlabeled:
        flags.add("pool_exhausted")
    if sim_time > budgets.time_constraint_s:
        flags.add("time_budget_exceeded")

    report = None if heldout is None else evaluate(model, heldout, space)

    emit({
        "event": "done",
        "iterations": iteration,
        "labels_used": labels_used,
        "pseudolabels": pseudo_added,
        "pseudo_correct": pseudo_correct,
        "abstentions": abstentions,
        "sim_time": sim_time,
        "flags": sorted(flags),
        "model_digest": model_digest(model),
        "ca": None if report is None else report.ca,
        "ra": None if report is None else report.ra,
        "suite_seed": suite_seed,
    })
    return SessionResult(
        model=model,
        trace=tuple(trace),
        labels_used=labels_used,
        pseudolabels_added=pseudo_added,
        pseudo_correct=pseudo_correct,
        abstentions=abstentions,
        iterations=iteration,
        sim_cost=sim_time,
        flags=tuple(sorted(flags)),
        metrics=report,
    )


def run(space: ConfigSpace, source, cfg: DriverConfig,
        expert_spec: ExpertSpec | None = None,
        trainer: Callable[[Sequence[PairSample], int], object] | None = None,
        sink: Callable[[dict], None] | None = None) -> SessionResult:
    """Run a full session against a simulated expert."""
    if expert_spec is None:
        expert_spec = ExpertSpec(seed=_derive(cfg.seed, "expert"))
    expert = SimulatedExpert(expert_spec)
    truth_oracle = make_oracle(space, source, cfg.budgets)

    gen = drive(space, source, cfg, expert_spec=expert_spec, trainer=trainer,
                sink=sink)
    answers: Sequence[ExpertAnswer] | None = None
    while True:
        try:
            batch = gen.send(answers) if answers is not None else next(gen)
        except StopIteration as stop:
            return stop.value
        answers = []
        for pair in batch.pairs:
            truth = label_from_measurements(
                truth_oracle.true_performance(batch.endpoints[pair.left_id]),
                truth_oracle.true_performance(batch.endpoints[pair.right_id]))
            answers.append(expert.label(truth))


def answers_from_events(trace: Sequence[dict]) -> dict[int, list[dict]]:
    return {e["iteration"]: e["answers"] for e in trace if e["event"] == "labeled"}


def refold(space: ConfigSpace, source, cfg: DriverConfig, trace: Sequence[dict],
           expert_spec: ExpertSpec | None = None,
           trainer: Callable[[Sequence[PairSample], int], object] | None = None,
           sink: Callable[[dict], None] | None = None):
    """Replay recorded answers through a fresh session.

    Returns ``(generator, batch)`` with the generator parked at the first
    unanswered batch, or ``(None, SessionResult)`` when the log is complete.
    """
    logged = answers_from_events(trace)
    gen = drive(space, source, cfg, expert_spec=expert_spec, trainer=trainer,
                sink=sink)
    answers: Sequence[ExpertAnswer] | None = None
    while True:
        try:
            batch = gen.send(answers) if answers is not None else next(gen)
        except StopIteration as stop:
            return None, stop.value
        if batch.iteration not in logged:
            return gen, batch
        answers = [
            ExpertAnswer(label=None if a["abstained"] else int(a["label"]),
                         abstained=bool(a["abstained"]))
            for a in logged[batch.iteration]
        ]


def replay(space: ConfigSpace, source, cfg: DriverConfig, trace: Sequence[dict],
           expert_spec: ExpertSpec | None = None,
           trainer: Callable[[Sequence[PairSample], int], object] | None = None
           ) -> SessionResult:
    """Refold a complete log; raises if the log stops before the session does."""
    gen, result = refold(space, source, cfg, trace, expert_spec=expert_spec,
                         trainer=trainer)
    if gen is not None:
        raise ValueError(
            f"event log ends with iteration {result.iteration} still unanswered")
    return result


# -- run-config document -------------------------------------------------------

def to_run_config(space: ConfigSpace, source, cfg: DriverConfig,
                  expert_spec: ExpertSpec | None = None) -> dict:
    import json

    doc: dict = {"space": json.loads(space_to_json(space))}
    if isinstance(source, SyntheticSurfaceSpec):
        doc["source"] = {
            "kind": "synthetic",
            "surface": source.kind,
            "weights": list(source.weights),
            "optimum": list(source.optimum),
            "interaction_pairs": [list(p) for p in source.interaction_pairs],
            "noise_sigma": source.noise_sigma,
            "seed": source.seed,
        }
    elif isinstance(source, DatasetOracle):
        if not getattr(source, "path", None):
            raise ValueError("dataset oracle needs a file path to be serializable")
        doc["source"] = {"kind": "dataset", "path": source.path}
    else:
        raise TypeError(f"unsupported source {type(source).__name__}")
    driver = asdict(cfg)
    budgets = driver.pop("budgets")
    if not math.isfinite(budgets["time_constraint_s"]):
        budgets["time_constraint_s"] = None
    driver["budgets"] = budgets
    doc["driver"] = driver
    doc["expert"] = None if expert_spec is None else {
        "accuracy": expert_spec.accuracy,
        "abstain_prob": expert_spec.abstain_prob,
        "seed": expert_spec.seed,
        "latency": expert_spec.latency,
    }
    return doc


def from_run_config(doc: dict) -> tuple[ConfigSpace, object, DriverConfig,
                                        ExpertSpec | None]:
    import json

    space = space_from_json(json.dumps(doc["space"]))
    driver = dict(doc["driver"])
    budgets = dict(driver.pop("budgets", None) or {})
    if budgets.get("time_constraint_s") is None:
        budgets["time_constraint_s"] = math.inf
    cfg = DriverConfig(**driver, budgets=Budgets(**budgets))
    src = doc["source"]
    if src["kind"] == "synthetic":
        source: object = SyntheticSurfaceSpec(
            kind=src["surface"],
            weights=tuple(src["weights"]),
            optimum=tuple(src["optimum"]),
            interaction_pairs=tuple(
                (int(a), int(b), float(c))
                for a, b, c in src.get("interaction_pairs", ())),
            noise_sigma=src.get("noise_sigma", 0.0),
            seed=src["seed"],
        )
    else:
        source = DatasetOracle.from_csv(src["path"], space,
                                        measurement_cost=cfg.budgets.measurement_cost_s)
    expert = doc.get("expert")
    spec = None if expert is None else ExpertSpec(
        accuracy=expert["accuracy"], abstain_prob=expert["abstain_prob"],
        seed=expert["seed"], latency=expert.get("latency", 30.0))
    return space, source, cfg, spec


# -- ablation harness ----------------------------------------------------------

def run_variant(space: ConfigSpace, source, cfg: DriverConfig, variant: str,
                expert_spec: ExpertSpec | None = None,
                trainer=None) -> SessionResult:
    fields = asdict(cfg)
    fields["budgets"] = cfg.budgets
    fields["variant"] = variant
    return run(space, source, DriverConfig(**fields), expert_spec=expert_spec,
               trainer=trainer)


def ablation_suite(space: ConfigSpace, surfaces: Sequence[SyntheticSurfaceSpec],
                   seeds: Sequence[int], base_cfg: DriverConfig,
                   expert_accuracy: float = 0.9,
                   variants: Sequence[str] = VARIANTS,
                   trainer=None,
                   session_runner=None) -> dict:
    """Per (surface, variant): CA statistics normalized to the passive baseline.

    ``session_runner`` may substitute a memoized runner with the same
    signature as :func:`run_variant` (used by long test suites).
    """
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds")
    runner = session_runner or run_variant
    wanted = list(dict.fromkeys(list(variants) + ["passive_svm"]))

    raw: dict[str, dict[str, list[float]]] = {}
    for surface in surfaces:
        name = f"{surface.kind}-{surface_digest(surface)}"
        per_variant: dict[str, list[float]] = {v: [] for v in wanted}
        for seed in seeds:
            fields = asdict(base_cfg)
            fields["budgets"] = base_cfg.budgets
            fields["seed"] = int(seed)
            cfg = DriverConfig(**fields)
            expert = ExpertSpec(accuracy=expert_accuracy, abstain_prob=0.0,
                                seed=_derive(int(seed), "expert"))
            for variant in wanted:
                result = runner(space, surface, cfg, variant,
                                expert_spec=expert, trainer=trainer)
                if result.metrics is None:
                    raise RuntimeError("ablation requires held-out metrics")
                per_variant[variant].append(result.metrics.ca)
        raw[name] = per_variant

    per_surface: dict[str, dict[str, dict[str, float]]] = {}
    for name, per_variant in raw.items():
        base = per_variant["passive_svm"]
        stats = {}
        for variant in wanted:
            norm = [ca / b for ca, b in zip(per_variant[variant], base)]
            stats[variant] = {
                "mean": float(np.mean(norm)),
                "var": float(np.var(norm)),
            }
        per_surface[name] = stats

    avr = {v: float(np.mean([per_surface[s][v]["mean"] for s in per_surface]))
           for v in wanted}
    var = {v: float(np.var([per_surface[s][v]["mean"] for s in per_surface]))
           for v in wanted}
    return {"per_surface": per_surface, "avr": avr, "var": var, "raw": raw,
            "seeds": [int(s) for s in seeds], "expert_accuracy": expert_accuracy}
