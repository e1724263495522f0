"""Compare session variants on the same surfaces and label budget.

Runs the full pipeline next to its ablations (diverse batches without
self-training, plain uncertainty sampling) and a passive baseline, then
prints comparison accuracy normalized to the baseline.  Things to read off
the table: every active variant beats passive at the same label budget, and
plain uncertainty sampling (al_i) buys its accuracy with the largest
run-to-run variance, which is what the clustered batches are for.  Three
seeds keep this demo quick; the ten-seed version of this comparison is
acceptance check 5.
"""

import pairtune as pt
from pairtune.driver import ablation_suite

space = pt.ConfigSpace(
    (
        pt.ParameterDef("alpha", "continuous", 0.0, 10.0),
        pt.ParameterDef("beta", "continuous", -5.0, 5.0),
        pt.ParameterDef("depth", "integer", 1, 64),
    ),
    "throughput",
    "higher_is_better",
)

surfaces = (
    pt.SyntheticSurfaceSpec("interaction", (1.0, 1.0, 1.0), (0.4, 0.6, 0.5),
                            ((0, 1, 0.8),), 0.02, 33),
    pt.SyntheticSurfaceSpec("interaction", (0.5, 1.5, 1.0), (0.6, 0.3, 0.7),
                            ((0, 2, -0.6), (1, 2, 0.4)), 0.05, 34),
)

# The comparison needs a candidate pool big enough that raw uncertainty
# sampling clumps near the current boundary; tiny pools flatten the effect.
base = pt.DriverConfig(Q=200, q=10, n=3, P=5, t=20, variant="cm_casl", seed=0,
                       initial_measured=20, pool_size=100)

variants = ("cm_casl", "al_ir", "al_i")
print("running", len(surfaces), "surfaces x", len(variants) + 1,
      "variants x 3 seeds (a few minutes)...\n")
out = ablation_suite(space, surfaces, seeds=(1, 2, 3), base_cfg=base,
                     expert_accuracy=0.9, variants=variants)

width = max(len(v) for v in out["avr"])
for name, stats in out["per_surface"].items():
    print(name)
    for variant in ("cm_casl", "al_ir", "al_i", "passive_svm"):
        s = stats[variant]
        print(f"  {variant:<{width}}  norm CA {s['mean']:.4f}  var {s['var']:.5f}")
print("\naverage over surfaces (passive baseline = 1.0):")
for variant in ("cm_casl", "al_ir", "al_i", "passive_svm"):
    print(f"  {variant:<{width}}  {out['avr'][variant]:.4f}")
