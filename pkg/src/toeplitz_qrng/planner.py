"""Min-entropy estimation and extractor dimensioning.

The output length per block follows the Leftover Hash Lemma,

    m < H_total - 2 * log2(1/eps),

with ``H_total`` the min-entropy of one ``n``-bit raw block. Logarithms are
base 2 throughout, so ``eps = 2**-50`` costs 100 bits.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import InfeasibleError, UsageError
from .gf2_toeplitz import ExtractorDims

# floor() tolerance so a bound that is an integer in exact arithmetic
# (48 * 13.5 - 100 = 548) is not lost to float rounding
_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class EntropyEstimate:
    h_min_per_sample: float
    sample_bits: int
    method: str
    sample_count: int = 0
    note: str = ""

    def __post_init__(self):
        if not 0.0 <= self.h_min_per_sample <= self.sample_bits + 1e-12:
            raise UsageError(
                f"min-entropy {self.h_min_per_sample} outside [0, {self.sample_bits}]"
            )

    @classmethod
    def given(cls, h_min_per_sample, sample_bits=16):
        """Wrap a min-entropy figure obtained elsewhere."""
        return cls(float(h_min_per_sample), sample_bits, "given")


@dataclass(frozen=True)
class SecurityParameter:
    """``eps = 2**log2_epsilon``."""

    log2_epsilon: int

    def __post_init__(self):
        if self.log2_epsilon >= 0:
            raise UsageError(f"log2_epsilon must be negative, got {self.log2_epsilon}")

    @property
    def epsilon(self):
        return 2.0**self.log2_epsilon

    @property
    def cost_bits(self):
        """``2 * log2(1/eps)``."""
        return -2 * self.log2_epsilon


@dataclass(frozen=True)
class PlanResult:
    dims: ExtractorDims
    extraction_ratio: float
    per_channel_output_bps: float
    feasible: bool
    reason: str
    entropy_per_block: float
    security: SecurityParameter

    def report(self):
        """Key/value pairs for the machine-readable plan report."""
        return {
            "m": self.dims.m,
            "n": self.dims.n,
            "k": self.dims.k,
            "extraction_ratio": f"{self.extraction_ratio:.6f}",
            "entropy_per_block": f"{self.entropy_per_block:.6f}",
            "log2_epsilon": self.security.log2_epsilon,
            "per_channel_output_bps": f"{self.per_channel_output_bps:.6g}",
            "feasible": str(self.feasible).lower(),
            "reason": self.reason,
        }


def empirical_min_entropy(samples, sample_bits, warn_below=None):
    """Plug-in min-entropy ``-log2(max_x p_hat(x))`` of ``sample_bits``-wide samples.

    A ``UserWarning`` is raised when fewer than ``warn_below`` samples are
    given (default ``2**(sample_bits + 6)``), since the largest bin frequency
    is biased upward for small samples.
    """
    samples = np.asarray(samples)
    if samples.size == 0:
        raise UsageError("cannot estimate min-entropy of an empty sample")
    if samples.min() < 0 or int(samples.max()) >= 1 << sample_bits:
        raise UsageError(f"samples must be {sample_bits}-bit unsigned values")
    if warn_below is None:
        warn_below = 2 ** (sample_bits + 6)
    if samples.size < warn_below:
        warnings.warn(
            f"{samples.size} samples is below {warn_below}; "
            "min-entropy estimate will be optimistic",
            stacklevel=2,
        )
    counts = np.bincount(samples.ravel().astype(np.int64))
    p_max = counts.max() / samples.size
    h = 0.0 if p_max == 1.0 else -math.log2(p_max)
    return EntropyEstimate(h, sample_bits, "empirical", int(samples.size))


def quantized_gaussian_probabilities(sigma, sample_bits, full_range=None):
    """Bin probabilities of ``N(0, sigma^2)`` quantized to ``2**sample_bits`` codes.

    Code ``c`` covers ``[(c - mid - 1/2) * delta, (c - mid + 1/2) * delta)`` with
    ``mid = 2**(sample_bits-1)`` and ``delta = full_range / 2**sample_bits``;
    tail mass beyond the range is folded into the two edge codes. This is the
    distribution produced by :func:`toeplitz_qrng.source_sim.generate`.
    """
    if not sigma > 0:
        raise UsageError(f"sigma must be positive, got {sigma}")
    nbins = 1 << sample_bits
    if full_range is None:
        full_range = float(nbins)
    delta = full_range / nbins
    mid = nbins // 2
    edges = (np.arange(nbins + 1) - mid - 0.5) * (delta / sigma)
    edges[0], edges[-1] = -np.inf, np.inf
    lo, hi = edges[:-1], edges[1:]
    # difference of upper tails on the positive side keeps precision
    upper = lo >= 0
    p = np.where(upper, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    return p


def gaussian_model_min_entropy(sigma, sample_bits=16, full_range=None):
    """Min-entropy of a centered Gaussian seen through an ideal ADC.

    ``sigma`` is in the same units as ``full_range`` (ADC codes when
    ``full_range`` is left at ``2**sample_bits``).
    """
    p = quantized_gaussian_probabilities(sigma, sample_bits, full_range)
    mode = int(np.argmax(p))
    note = ""
    if mode in (0, p.size - 1):
        note = "edge bin is the mode: clipping dominates"
    h = max(0.0, -math.log2(p[mode]))
    return EntropyEstimate(min(h, float(sample_bits)), sample_bits, "gaussian-model", 0, note)


def sigma_for_min_entropy(target_bits, sample_bits=16, full_range=None):
    """Inverse of :func:`gaussian_model_min_entropy` in ``sigma``."""
    if not 0 < target_bits < sample_bits:
        raise UsageError(f"target must lie in (0, {sample_bits})")

    def gap(log_sigma):
        est = gaussian_model_min_entropy(math.exp(log_sigma), sample_bits, full_range)
        return est.h_min_per_sample - target_bits

    # past the peak the clipped tails make the edge codes the mode and h_min
    # falls again, so bracket the root on the rising side only
    span = full_range if full_range is not None else float(1 << sample_bits)
    grid = np.linspace(math.log(span * 1e-6), math.log(span), 200)
    peak = grid[int(np.argmax([gap(g) for g in grid]))]
    if gap(peak) < 0:
        raise InfeasibleError(f"no sigma reaches {target_bits} bits at this range")
    return math.exp(optimize.brentq(gap, grid[0], peak, xtol=1e-12))


def _lhl_length(total_entropy, security):
    bound = total_entropy - security.cost_bits
    # inclusive at exact integers, so 648 - 100 gives 548 as published
    m = math.floor(bound + _BOUNDARY_TOL)
    if m < 1:
        raise InfeasibleError(
            f"block min-entropy {total_entropy:.3f} bits leaves nothing after "
            f"{security.cost_bits} bits of security cost"
        )
    return m


def extractable_bits(estimate, samples_per_block, security):
    """Output bits per block allowed by the Leftover Hash Lemma."""
    if samples_per_block < 1:
        raise UsageError("samples_per_block must be >= 1")
    return _lhl_length(samples_per_block * estimate.h_min_per_sample, security)


def plan_dims(estimate, n, k, security, clock_hz=240e6):
    """Choose ``m`` for an ``n``-bit block consumed ``k`` bits per clock.

    Real-time operation needs one ADC sample per clock, so the plan is only
    marked feasible when ``k`` equals the sample width.
    """
    b = estimate.sample_bits
    if k < 1 or n % k:
        raise UsageError(f"k={k} must divide n={n}")
    if n % b:
        raise UsageError(f"n={n} is not a whole number of {b}-bit samples")
    samples_per_block = n // b
    m = extractable_bits(estimate, samples_per_block, security)
    dims = ExtractorDims(m, n, k)
    feasible = k == b
    reason = "ok" if feasible else f"k={k} differs from sample width {b}; not real-time"
    return PlanResult(
        dims=dims,
        extraction_ratio=m / n,
        per_channel_output_bps=clock_hz * k * m / n,
        feasible=feasible,
        reason=reason,
        entropy_per_block=samples_per_block * estimate.h_min_per_sample,
        security=security,
    )


@dataclass(frozen=True)
class Throughput:
    raw_bps: tuple
    output_bps: tuple
    aggregate_raw_bps: float
    aggregate_output_bps: float


def throughput(dims_list, clock_hz, k=None):
    """Modeled rates when every channel takes one ``k``-bit word per clock."""
    if not clock_hz > 0:
        raise UsageError("clock_hz must be positive")
    raw, out = [], []
    for dims in dims_list:
        step = dims.k if k is None else k
        r = clock_hz * step
        raw.append(r)
        out.append(r * dims.m / dims.n)
    return Throughput(tuple(raw), tuple(out), sum(raw), sum(out))
