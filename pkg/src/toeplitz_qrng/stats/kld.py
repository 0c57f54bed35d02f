"""Kullback-Leibler divergence between word histograms."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import UsageError

FINE_BINS = 1 << 16
COARSE_BINS = 1 << 8
# fine binning only when the average bin holds this many words
MIN_WORDS_PER_BIN = 16


def choose_bin_count(n_words, word_bits=16):
    """One bin per word value if the sample is large enough, else 256 bins."""
    fine = 1 << word_bits
    if n_words >= MIN_WORDS_PER_BIN * fine:
        return fine
    return min(COARSE_BINS, fine)


def word_histogram(words, bin_count, word_bits=16):
    """Counts of ``words`` in ``bin_count`` equal bins (top bits of each word)."""
    words = np.asarray(words)
    if bin_count & (bin_count - 1) or bin_count > 1 << word_bits:
        raise UsageError(f"bin_count must be a power of two <= 2**{word_bits}")
    shift = word_bits - (bin_count.bit_length() - 1)
    idx = (words.astype(np.uint64) >> np.uint64(shift)).astype(np.int64)
    return np.bincount(idx, minlength=bin_count)


def kld(reference_hist, sample_hist, smoothing=1.0):
    """``D(p || q)`` in bits, ``p`` from the reference and ``q`` from the sample.

    ``smoothing`` pseudo-counts are added to every bin of the sample
    histogram before normalization. Bins where the reference is empty do not
    contribute. Returns ``inf`` if ``q`` is zero where ``p`` is not.
    """
    p = np.asarray(reference_hist, dtype=np.float64)
    q = np.asarray(sample_hist, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise UsageError(f"histogram shapes differ: {p.shape} vs {q.shape}")
    if smoothing < 0:
        raise UsageError("smoothing must be >= 0")
    if (p < 0).any() or (q < 0).any():
        raise UsageError("histograms must be non-negative")
    q = q + smoothing
    if p.sum() <= 0 or q.sum() <= 0:
        raise UsageError("histograms must have positive totals")
    p = p / p.sum()
    q = q / q.sum()
    mask = p > 0
    if (q[mask] == 0).any():
        return math.inf
    return max(0.0, float(np.sum(p[mask] * np.log2(p[mask] / q[mask]))))


def kld_noise_level(bin_count, n):
    """``(B - 1) / (2 N ln 2)``: expected KLD in bits from sampling noise alone."""
    return (bin_count - 1) / (2.0 * n * math.log(2))


@dataclass
class KldReport:
    reference_histogram: np.ndarray
    batch_kld: np.ndarray
    bin_count: int
