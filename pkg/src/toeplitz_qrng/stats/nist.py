"""A native subset of the NIST SP 800-22 tests, plus pass-rate accounting.

Implemented: frequency (monobit), frequency within a block, runs and
cumulative sums. The remaining tests of the suite are expected to be run by
the reference tool on a file produced by :func:`export_bitstream`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..bits import as_bits
from ..errors import UsageError


def _bits(bits, minimum, test):
    bits = as_bits(bits)
    if bits.ndim != 1:
        raise UsageError(f"{test}: expected a 1-D bitstream")
    if bits.size < minimum:
        raise UsageError(f"{test} needs at least {minimum} bits, got {bits.size}")
    return bits


def monobit_test(bits):
    """Frequency test: ``erfc(|S_n| / sqrt(2n))``."""
    bits = _bits(bits, 100, "monobit")
    n = bits.size
    s = 2 * int(np.count_nonzero(bits)) - n
    return float(special.erfc(abs(s) / math.sqrt(2 * n)))


def block_frequency_test(bits, block_len=128):
    """Frequency within ``M``-bit blocks; the tail shorter than ``M`` is dropped."""
    bits = _bits(bits, 100, "block frequency")
    if block_len < 1:
        raise UsageError("block_len must be >= 1")
    nblocks = bits.size // block_len
    if nblocks < 1:
        raise UsageError(f"block_len {block_len} exceeds sequence length {bits.size}")
    pi = bits[: nblocks * block_len].reshape(nblocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(np.sum((pi - 0.5) ** 2))
    return float(special.gammaincc(nblocks / 2.0, chi2 / 2.0))


def runs_test(bits):
    """Runs test; returns 0 when the frequency prerequisite already fails."""
    bits = _bits(bits, 100, "runs")
    n = bits.size
    pi = np.count_nonzero(bits) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    v_obs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return float(special.erfc(num / den))


def cusum_test(bits, mode="forward"):
    """Cumulative sums test, ``mode`` is ``"forward"`` or ``"backward"``."""
    bits = _bits(bits, 100, "cusum")
    if mode not in ("forward", "backward"):
        raise UsageError(f"unknown cusum mode {mode!r}")
    x = 2 * bits.astype(np.int64) - 1
    if mode == "backward":
        x = x[::-1]
    z = int(np.max(np.abs(np.cumsum(x))))
    n = bits.size
    if z == 0:
        return 1.0
    sqrt_n = math.sqrt(n)
    ndtr = special.ndtr

    k1 = np.arange(math.floor((-n / z + 1) / 4), math.floor((n / z - 1) / 4) + 1)
    k2 = np.arange(math.floor((-n / z - 3) / 4), math.floor((n / z - 1) / 4) + 1)
    s1 = np.sum(ndtr((4 * k1 + 1) * z / sqrt_n) - ndtr((4 * k1 - 1) * z / sqrt_n))
    s2 = np.sum(ndtr((4 * k2 + 3) * z / sqrt_n) - ndtr((4 * k2 + 1) * z / sqrt_n))
    return float(min(1.0, max(0.0, 1.0 - s1 + s2)))


NATIVE_TESTS = {
    "monobit": monobit_test,
    "block_frequency": block_frequency_test,
    "runs": runs_test,
    "cusum": cusum_test,
}


@dataclass
class TestReport:
    __test__ = False  # not a pytest class

    test_name: str
    p_values: np.ndarray
    alpha: float
    pass_proportion: float
    confidence_interval: tuple

    @property
    def count(self):
        return len(self.p_values)

    @property
    def passed(self):
        lo, hi = self.confidence_interval
        return lo <= self.pass_proportion <= hi

    def summary(self):
        lo, hi = self.confidence_interval
        return (
            f"{self.test_name:<16} n={self.count:<5} pass={self.pass_proportion:.4f} "
            f"interval=[{lo:.4f}, {hi:.4f}] {'PASS' if self.passed else 'FAIL'}"
        )


def proportion_interval(alpha, count):
    """``(1-alpha) +/- 3 sqrt(alpha(1-alpha)/count)``."""
    p = 1.0 - alpha
    half = 3.0 * math.sqrt(alpha * p / count)
    return p - half, p + half


def pass_rate(p_values, alpha=0.01, test_name="test"):
    p_values = np.asarray(p_values, dtype=np.float64)
    if p_values.size == 0:
        raise UsageError("pass_rate needs at least one p-value")
    proportion = float(np.mean(p_values >= alpha))
    return TestReport(test_name, p_values, alpha, proportion, proportion_interval(alpha, p_values.size))


def run_tests(bits, sequence_length, tests=None, alpha=0.01):
    """Split ``bits`` into sequences and run each test on every one.

    Returns ``{test name: TestReport}``. Trailing bits that do not fill a
    sequence are ignored.
    """
    bits = as_bits(bits)
    count = bits.size // sequence_length
    if count < 1:
        raise UsageError(f"need at least {sequence_length} bits, got {bits.size}")
    tests = NATIVE_TESTS if tests is None else {name: NATIVE_TESTS[name] for name in tests}
    seqs = bits[: count * sequence_length].reshape(count, sequence_length)
    return {
        name: pass_rate([fn(seq) for seq in seqs], alpha, name) for name, fn in tests.items()
    }


def export_bitstream(bits, path, fmt="binary"):
    """Write bits for the reference test suite.

    ``binary`` packs MSB-first, which is how the reference suite reads
    binary files; ``ascii`` writes one ``0``/``1`` character per bit.
    """
    bits = as_bits(bits)
    if fmt == "binary":
        data = np.packbits(bits, bitorder="big").tobytes()
        mode = "wb"
    elif fmt == "ascii":
        data = (bits + ord("0")).astype(np.uint8).tobytes()
        mode = "wb"
    else:
        raise UsageError(f"unknown export format {fmt!r}")
    with open(path, mode) as fh:
        fh.write(data)
