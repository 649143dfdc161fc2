#!/usr/bin/env python3
"""The toy transfer experiment: learn a capability from synthetic data,
drop its artifact with guided sampling.

Real toy data covers only the upper half circle (z near 0); synthetic data
covers the full circle but carries a z-offset artifact.  A generation model
fine-tuned on the mix inherits both.  Combining it at sampling time with a
synthetic-only reference model (SimDrop) keeps the full angular coverage
while pulling z back toward the real value.

Takes a minute or two of CPU.
"""

from synthvid.guidance import (
    default_guidance_params, run_simdrop_experiment, train_transfer_models,
)

print("training base (real-only), generation (mixed), reference (synthetic-only)...")
base, gen, ref = train_transfer_models(seed=1)

print("\nreal-only model, unguided (the capability gap):")
from synthvid.guidance import GuidanceParams
from synthvid.flowlab import REAL_LABEL

report = run_simdrop_experiment(base, base,
                                GuidanceParams(alpha=0.0, beta=0.0, t=REAL_LABEL),
                                n_samples=2000, seed=99)
print(f"  coverage {report.covered_bins}/36 bins, artifact mean {report.artifact_mean:+.3f}")

print("\nguided sampling from the mixed model (beta = 0.3):")
print(f"  {'alpha':>6} {'coverage':>10} {'artifact mean':>14} {'|z| mean':>10}")
for alpha in (0.0, 0.1, 0.2):
    report = run_simdrop_experiment(gen, ref, default_guidance_params(alpha),
                                    n_samples=2000, seed=99)
    print(f"  {alpha:>6} {report.covered_bins:>7}/36 {report.artifact_mean:>+14.3f} "
          f"{report.artifact_abs_mean:>10.3f}")

print("\nreading: coverage stays full (capability transferred) while the "
      "artifact coordinate shrinks as alpha grows.")
