"""Plain Monte Carlo against a saturation hunt: how close does the bound get?"""
import numpy as np

from naqtur.collision import CollisionConfig
from naqtur.harness import ExperimentConfig, run, summarize

collision = CollisionConfig(system_mode="mixed", seed=2026)

mc = run(ExperimentConfig(collision=collision, n_samples=1000))
hunt_cfg = ExperimentConfig(collision=collision, n_samples=400, strategy="saturation-hunt")
hunt = run(hunt_cfg)

for name, recs in (("monte carlo", mc), ("saturation hunt", hunt)):
    st = summarize(recs)
    print(f"{name:16s} records {st.n_total:5d}  violations {st.n_violations}"
          f"  min slack {st.min_rel_slack:.2e}  frac < 0.05 {st.frac_rel_slack_below_0_05:.1%}")

rounds = np.bincount([r.round for r in hunt])
print("\nrecords retained per hunt round:", rounds.tolist())

print("\nslack against current size (hunt):")
for b in summarize(hunt, hunt_cfg).slack_vs_dq_bins:
    if b["count"]:
        print(f"|dq| ~ {b['center']:.2e}   n={b['count']:4d}   mean slack {b['mean']:.3f}")
