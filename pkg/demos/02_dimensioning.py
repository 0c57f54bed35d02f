"""Choosing the output length from a min-entropy estimate.

The Leftover Hash Lemma allows m bits out of an n-bit block holding
H bits of min-entropy, with m < H - 2 log2(1/eps). With 16-bit samples,
768-bit blocks and eps = 2^-50, channels at 12.9, 13.5 and 14.2 bits per
sample give 519, 548 and 581 output bits.
"""

from toeplitz_qrng.planner import (
    EntropyEstimate,
    SecurityParameter,
    gaussian_model_min_entropy,
    plan_dims,
    sigma_for_min_entropy,
    throughput,
)

eps = SecurityParameter(-50)
plans = []
for h in (12.9, 13.5, 14.2):
    plan = plan_dims(EntropyEstimate.given(h), n=768, k=16, security=eps)
    plans.append(plan)
    print(f"H_min {h:>4} bits/sample -> {plan.dims.m}x{plan.dims.n}, ratio {plan.extraction_ratio:.4f}")

rate = throughput([p.dims for p in plans], clock_hz=240e6)
for p, out in zip(plans, rate.output_bps):
    print(f"  {p.dims.m}x768 at 240 MHz: {out / 1e9:.3f} Gbps")
print(f"aggregate: {rate.aggregate_output_bps / 1e9:.2f} Gbps")

# the simulator's noise widths come from inverting the Gaussian-ADC model
print("\nGaussian noise width needed for each target:")
for h in (12.9, 13.5, 14.2):
    sigma = sigma_for_min_entropy(h, 16)
    check = gaussian_model_min_entropy(sigma, 16).h_min_per_sample
    print(f"  {h} bits -> sigma {sigma:.1f} codes (model gives {check:.4f})")

# wider noise helps only until clipping piles the tails into the edge codes
for sigma in (7500, 20000, 60000):
    est = gaussian_model_min_entropy(sigma, 16)
    print(f"  sigma {sigma:>6}: {est.h_min_per_sample:.3f} bits {est.note}")
