"""Decimalization and normalized auto/cross-correlation."""

from dataclasses import dataclass

import numpy as np

from ..bits import as_bits
from ..errors import DegenerateInputError, UsageError


@dataclass
class CorrelationSeries:
    lags: np.ndarray
    values: np.ndarray
    n_points: int

    def at(self, lag):
        idx = np.flatnonzero(self.lags == lag)
        if not idx.size:
            raise UsageError(f"lag {lag} not in series")
        return float(self.values[idx[0]])

    def off_peak(self):
        """Values at every lag except 0."""
        return self.values[self.lags != 0]

    def to_text(self):
        lines = [f"# n_points: {self.n_points}", "# lag value"]
        lines += [f"{lag} {value:.12g}" for lag, value in zip(self.lags, self.values)]
        return "\n".join(lines) + "\n"


def decimalize(bits, word_bits=16):
    """Group a bitstream into unsigned ``word_bits``-wide integers.

    Bit order matches the packing convention: the first bit of each group is
    the least significant, so packed bytes ``34 12`` give ``0x1234``.
    """
    bits = as_bits(bits)
    if bits.ndim != 1:
        raise UsageError("decimalize takes a 1-D bitstream")
    if bits.size % word_bits:
        raise UsageError(f"{bits.size} bits is not a multiple of {word_bits}")
    if word_bits > 64:
        raise UsageError("word_bits above 64 is not supported")
    groups = bits.reshape(-1, word_bits)
    if word_bits % 8 == 0 and word_bits in (8, 16, 32, 64):
        packed = np.packbits(groups, axis=-1, bitorder="little")
        return np.ascontiguousarray(packed).view(f"<u{word_bits // 8}").reshape(-1)
    weights = np.uint64(1) << np.arange(word_bits, dtype=np.uint64)
    return (groups.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


def _centered(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise UsageError(f"{name} must be 1-D")
    x = x - x.mean()
    energy = float(np.dot(x, x))
    if energy == 0.0:
        raise DegenerateInputError(f"{name} has zero variance")
    return x, energy


def _raw_xcorr(x, y, max_lag):
    """``sum_t x_t * y_{t+tau}`` for ``tau = -max_lag .. max_lag`` via FFT."""
    n = x.size
    size = 1 << int(np.ceil(np.log2(2 * n - 1)))
    fx = np.fft.rfft(x, size)
    fy = np.fft.rfft(y, size)
    full = np.fft.irfft(np.conj(fx) * fy, size)
    pos = full[: max_lag + 1]
    neg = full[size - max_lag :] if max_lag else full[:0]
    return np.concatenate([neg, pos])


def acf(x, max_lag):
    """Biased autocorrelation ``rho(tau)``, ``tau = 0 .. max_lag``."""
    x = np.asarray(x)
    if max_lag < 0 or x.size <= max_lag:
        raise UsageError(f"need more than max_lag={max_lag} points, got {x.size}")
    xc, energy = _centered(x, "x")
    values = _raw_xcorr(xc, xc, max_lag)[max_lag:] / energy
    values[0] = 1.0
    return CorrelationSeries(np.arange(max_lag + 1), np.clip(values, -1.0, 1.0), x.size)


def ccf(x, y, max_lag):
    """Normalized cross-correlation ``sum_t x_t y_{t+tau}`` for ``|tau| <= max_lag``.

    A copy of ``x`` delayed by ``s`` samples peaks at ``tau = s``.
    """
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise UsageError(f"length mismatch: {x.shape} vs {y.shape}")
    if max_lag < 0 or x.size <= max_lag:
        raise UsageError(f"need more than max_lag={max_lag} points, got {x.size}")
    xc, ex = _centered(x, "x")
    yc, ey = _centered(y, "y")
    values = _raw_xcorr(xc, yc, max_lag) / np.sqrt(ex * ey)
    return CorrelationSeries(np.arange(-max_lag, max_lag + 1), np.clip(values, -1.0, 1.0), x.size)
