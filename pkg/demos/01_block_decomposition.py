"""Step-by-step Toeplitz hashing on a tiny example.

A 2x4 Toeplitz matrix is built from a 5-bit seed and applied to a 4-bit
raw block two bits at a time, the way the streaming extractor does it.
Each step multiplies one 2x2 sub-matrix by one step word and XORs the
result into the accumulator.
"""

import numpy as np

from toeplitz_qrng import (
    ExtractorDims,
    Seed,
    matvec_full,
    new_extractor,
    submatrix_product,
    submatrix_window,
    toeplitz_matrix,
)

dims = ExtractorDims(m=2, n=4, k=2)
seed = Seed([1, 0, 1, 1, 0])
raw = np.array([1, 1, 0, 1], dtype=np.uint8)

print("Toeplitz matrix (first row s_m..s_{m+n-1}, last row s_1..s_n):")
print(toeplitz_matrix(seed, dims))
print("whole-matrix product:", matvec_full(seed, dims, raw))

acc = np.zeros(dims.m, dtype=np.uint8)
for i in range(1, dims.steps + 1):
    window = submatrix_window(seed, dims, i)
    step = raw[(i - 1) * dims.k : i * dims.k]
    part = submatrix_product(window, step, dims)
    acc ^= part
    print(f"step {i}: window {window}, step word {step}, partial {part}, accumulator {acc}")

# the streaming state machine does the same thing and emits on the last step
state = new_extractor(dims, seed)
print("streaming, step 1:", state.ingest_step(raw[:2]), "accumulator", state.accumulator)
print("streaming, step 2:", state.ingest_step(raw[2:]))

# at full scale the same product runs through a packed lookup-table kernel
big = ExtractorDims(519, 768, 16)
rng = np.random.default_rng(0)
big_seed = Seed.random(big.seed_length, rng)
samples = rng.integers(0, 1 << 16, 48 * 100, dtype=np.uint16)
blocks = new_extractor(big, big_seed).ingest_samples(samples)
print(f"\n519x768: {len(samples)} samples -> {blocks.shape[0]} blocks of {blocks.shape[1]} bits")
