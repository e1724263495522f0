"""One labeling session, start to finish, against a simulated expert.

Walks through: defining a space, describing a synthetic system, running a
session, reading the event trace, and verifying the trace replays.
"""

from collections import Counter

import pairtune as pt

space = pt.ConfigSpace(
    (
        pt.ParameterDef("threads", "integer", 1, 64),
        pt.ParameterDef("batch_kb", "continuous", 4.0, 4096.0),
        pt.ParameterDef("io_mode", "categorical", categories=("sync", "async", "mmap")),
    ),
    "throughput",
    "higher_is_better",
)

# A stand-in for the real system: a noisy quadratic with its peak somewhere
# in the encoded unit cube.  The categorical parameter one-hot encodes into
# three coordinates, so the surface is 5-dimensional; its optimum picks the
# "sync" corner.  Real deployments swap in a DatasetOracle.
surface = pt.SyntheticSurfaceSpec(
    "quadratic_bowl",
    weights=(1.0, 2.0, 0.3, 0.3, 0.3),
    optimum=(0.7, 0.3, 1.0, 0.0, 0.0),
    noise_sigma=0.03,
    seed=42,
)

cfg = pt.DriverConfig(
    Q=120,            # total expert-label budget
    q=10,             # labels requested per batch
    n=3,              # cluster over-provisioning factor (q*n clusters)
    P=5,              # active-learning batches per self-training step
    t=20,             # pseudolabels added per self-training step
    variant="cm_casl",
    seed=0,
    initial_measured=15,
    pool_size=80,
)

expert = pt.ExpertSpec(accuracy=0.9, abstain_prob=0.02, seed=1)

print("running a", cfg.variant, "session:", cfg.Q, "labels in batches of", cfg.q)
result = pt.run(space, surface, cfg, expert_spec=expert)

kinds = Counter(e["event"] for e in result.trace)
print("\nevent trace:", dict(kinds))
print("labels used:        ", result.labels_used)
print("pseudolabels added: ", result.pseudolabels_added,
      f"({result.pseudo_correct} correct)")
print("expert abstentions: ", result.abstentions)
print("simulated wall cost:", f"{result.sim_cost:.0f}s",
      "(measurements + expert latency)")

m = result.metrics
print("\nheld-out comparison accuracy:", f"{m.ca:.1f}%")
print("held-out mean rank error:    ", f"{m.ra:.2f}")

# The trace is the session.  Same config + seeds = same bytes, and replay
# re-executes the log, verifying every recorded event along the way.
blob = result.trace_jsonl()
replayed = pt.replay(space, surface, cfg, pt.parse_jsonl(blob), expert_spec=expert)
assert replayed.trace_jsonl() == blob
print("\nreplay: byte-identical,", len(result.trace), "events")
