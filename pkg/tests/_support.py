"""Helpers shared by test modules."""

import numpy as np

from toeplitz_qrng import ExtractorDims

ACCEPTANCE_RESULTS = []


def record_acceptance(name, passed, detail=""):
    ACCEPTANCE_RESULTS.append((name, bool(passed), detail))


def random_dims(rng, max_n=64):
    n = int(rng.integers(2, max_n + 1))
    divisors = [d for d in range(1, n + 1) if n % d == 0]
    k = int(rng.choice(divisors))
    m = int(rng.integers(1, n))
    return ExtractorDims(m, n, k)


def bits_to_samples(raw, k):
    """Pack each k-bit step of a raw bit array into an integer, d_1 as LSB."""
    steps = np.asarray(raw).reshape(-1, k).astype(np.uint64)
    weights = np.uint64(1) << np.arange(k, dtype=np.uint64)
    return (steps * weights).sum(axis=1, dtype=np.uint64)


def brute_force_product(seed_bits, m, n, raw):
    """Pure-Python T @ raw with T[r][c] = s_{m-r+c} (1-based)."""
    out = []
    for r in range(1, m + 1):
        acc = 0
        for c in range(1, n + 1):
            acc ^= seed_bits[m - r + c - 1] & raw[c - 1]
        out.append(acc)
    return out
