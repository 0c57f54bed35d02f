"""Long-run stability monitoring over batches of output."""

from dataclasses import dataclass

import numpy as np

from ..bits import as_bits
from ..errors import UsageError
from .correlation import decimalize
from .kld import KldReport, choose_bin_count, kld, word_histogram
from .nist import NATIVE_TESTS, run_tests


@dataclass
class TimelinePoint:
    batch: int
    min_pass_rate: float
    worst_test: str
    kld: float
    reports: dict


@dataclass
class BatchTimeline:
    points: list
    kld_report: KldReport
    reference_batch_index: int

    def __len__(self):
        return len(self.points)

    @property
    def kld_values(self):
        return np.array([p.kld for p in self.points])

    @property
    def min_pass_rates(self):
        return np.array([p.min_pass_rate for p in self.points])

    def to_text(self):
        lines = ["# batch min_pass_rate worst_test kld_bits"]
        for p in self.points:
            lines.append(f"{p.batch} {p.min_pass_rate:.6f} {p.worst_test} {p.kld:.8g}")
        return "\n".join(lines) + "\n"


def batch_monitor(
    batches,
    tests=None,
    reference_batch_index=0,
    sequence_length=100_000,
    alpha=0.01,
    bin_count=None,
    smoothing=1.0,
    word_bits=16,
):
    """Minimum pass rate and KLD against the reference batch, per batch.

    Each batch is split into ``sequence_length``-bit sequences for the tests
    (a shorter batch is tested as one sequence). KLD compares decimalized
    word histograms; the reference batch gets its own point too, which is
    zero up to the smoothing.
    """
    batches = [as_bits(b) for b in batches]
    if len(batches) < 2:
        raise UsageError("batch_monitor needs at least two batches")
    if not 0 <= reference_batch_index < len(batches):
        raise UsageError("reference_batch_index out of range")
    tests = list(NATIVE_TESTS) if tests is None else list(tests)

    def words_of(bits):
        usable = bits.size - bits.size % word_bits
        return decimalize(bits[:usable], word_bits)

    words = [words_of(b) for b in batches]
    if bin_count is None:
        bin_count = choose_bin_count(min(len(w) for w in words), word_bits)
    ref_hist = word_histogram(words[reference_batch_index], bin_count, word_bits)

    points, klds = [], []
    for i, (bits, w) in enumerate(zip(batches, words)):
        seq_len = min(sequence_length, bits.size)
        reports = run_tests(bits, seq_len, tests, alpha)
        worst = min(reports, key=lambda name: reports[name].pass_proportion)
        d = kld(ref_hist, word_histogram(w, bin_count, word_bits), smoothing)
        klds.append(d)
        points.append(TimelinePoint(i, reports[worst].pass_proportion, worst, d, reports))
    return BatchTimeline(points, KldReport(ref_hist, np.array(klds), bin_count), reference_batch_index)
