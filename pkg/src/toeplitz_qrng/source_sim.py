"""Simulated multi-channel entropy source and raw sample files.

This is a pseudo-random stand-in for a homodyne detector followed by a
mixer, low-pass filter and ADC. It produces realistic *shapes* of data
(quantized Gaussian codes with a little short-range correlation) so that the
extractor and the statistics can be exercised end to end. Nothing it
produces carries physical entropy.

Raw sample files are headerless little-endian unsigned words of
``ceil(bits/8)`` bytes. An optional sidecar ``<file>.meta`` holds
``key: value`` lines (``bits``, ``sample_rate_hz``, ``channel_label``,
``prng_seed`` and anything else the writer chose to add).
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import ConfigurationError, DataFormatError, UsageError

META_SUFFIX = ".meta"


@dataclass(frozen=True)
class ChannelModel:
    """Noise and ADC parameters for one sideband channel.

    ``sigma_quantum`` and ``sigma_classical`` are in the units of
    ``adc_range``; with the default range of ``2**adc_bits`` they are ADC
    codes. ``lag1_correlation`` is the AR(1) coefficient of the analog
    noise, standing in for the finite detection bandwidth.
    """

    label: str
    sigma_quantum: float
    sigma_classical: float = 0.0
    adc_bits: int = 16
    adc_range: float = None
    sample_rate_hz: float = 240e6
    lag1_correlation: float = 0.0

    def __post_init__(self):
        if not self.sigma_quantum > 0:
            raise ConfigurationError(f"{self.label}: sigma_quantum must be positive")
        if self.sigma_classical < 0:
            raise ConfigurationError(f"{self.label}: sigma_classical must be >= 0")
        if not 1 <= self.adc_bits <= 32:
            raise ConfigurationError(f"{self.label}: adc_bits must be in 1..32")
        if self.adc_range is None:
            object.__setattr__(self, "adc_range", float(1 << self.adc_bits))
        if not self.adc_range > 0:
            raise ConfigurationError(f"{self.label}: adc_range must be positive")
        if not -1 < self.lag1_correlation < 1:
            raise ConfigurationError(f"{self.label}: lag1_correlation must be in (-1, 1)")

    @property
    def sigma_total(self):
        return math.hypot(self.sigma_quantum, self.sigma_classical)

    @property
    def code_width(self):
        return self.adc_range / (1 << self.adc_bits)


@dataclass(frozen=True)
class SourceModel:
    channels: tuple
    prng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ConfigurationError("source model needs at least one channel")
        if not 0 <= self.prng_seed < 2**64:
            raise ConfigurationError("prng_seed must be a 64-bit unsigned integer")

    def channel(self, index):
        if not 0 <= index < len(self.channels):
            raise ConfigurationError(f"channel {index} outside 0..{len(self.channels) - 1}")
        return self.channels[index]


def _split_sigma(total, snr_db):
    ratio = 10 ** (snr_db / 10)
    classical = total / math.sqrt(1 + ratio)
    return total * math.sqrt(ratio / (1 + ratio)), classical


# total sigma (codes) calibrated with planner.sigma_for_min_entropy for
# 12.9 / 13.5 / 14.2 bits per 16-bit sample, split at 12 dB SNR
DEFAULT_SNR_DB = 12.0
DEFAULT_SIGMA_TOTAL = {"200MHz": 3049.3, "600MHz": 4621.8, "1GHz": 7508.2}
DEFAULT_LAG1_CORRELATION = 0.05


def default_model(prng_seed=0, snr_db=DEFAULT_SNR_DB, lag1_correlation=DEFAULT_LAG1_CORRELATION):
    """Three channels at 200 MHz, 600 MHz and 1 GHz sideband centers."""
    channels = []
    for label, total in DEFAULT_SIGMA_TOTAL.items():
        q, c = _split_sigma(total, snr_db)
        channels.append(ChannelModel(label, q, c, lag1_correlation=lag1_correlation))
    return SourceModel(tuple(channels), prng_seed)


def channel_seed_sequence(prng_seed, channel):
    """Independent substream per channel: ``SeedSequence(prng_seed, spawn_key=(channel,))``."""
    return np.random.SeedSequence(prng_seed, spawn_key=(channel,))


@dataclass
class RawSampleStream:
    samples: np.ndarray
    sample_bits: int = 16
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)


def _sample_dtype(bits):
    for dtype in (np.uint8, np.uint16, np.uint32, np.uint64):
        if bits <= np.dtype(dtype).itemsize * 8:
            return np.dtype(dtype)
    raise UsageError(f"unsupported sample width {bits}")


class ChannelGenerator:
    """Stateful sample generator for one channel.

    Successive :meth:`read` calls continue the same stream, so reading in
    chunks gives exactly the samples of a single large read.
    """

    def __init__(self, model, channel):
        self.model = model
        self.index = channel
        self.params = model.channel(channel)
        self._rng = np.random.Generator(np.random.PCG64(channel_seed_sequence(model.prng_seed, channel)))
        self._prev = None
        self.produced = 0

    def _analog(self, count):
        a = self.params.lag1_correlation
        e = self._rng.standard_normal(count)
        if a == 0.0 or count == 0:
            return e
        gain = math.sqrt(1.0 - a * a)
        out = np.empty(count)
        start = 0
        if self._prev is None:
            # stationary start: the first value is a plain unit normal
            out[0] = e[0]
            self._prev = e[0]
            start = 1
        if start < count:
            out[start:], _ = signal.lfilter([gain], [1.0, -a], e[start:], zi=[a * self._prev])
            self._prev = out[-1]
        return out

    def read(self, count):
        if count < 0:
            raise UsageError("count must be >= 0")
        p = self.params
        v = self._analog(count) * p.sigma_total
        top = (1 << p.adc_bits) - 1
        codes = np.rint(v / p.code_width) + (1 << (p.adc_bits - 1))
        np.clip(codes, 0, top, out=codes)
        self.produced += count
        return codes.astype(_sample_dtype(p.adc_bits))

    def metadata(self):
        return {
            "bits": self.params.adc_bits,
            "sample_rate_hz": self.params.sample_rate_hz,
            "channel_label": self.params.label,
            "channel_index": self.index,
            "prng_seed": self.model.prng_seed,
        }


def generate(model, channel, count):
    """``count`` samples of ``channel`` from the start of its stream."""
    gen = ChannelGenerator(model, channel)
    samples = gen.read(count)
    return RawSampleStream(samples, gen.params.adc_bits, gen.metadata())


def snr_db(model, channel):
    """Quantum-to-classical noise power ratio in dB (``inf`` without classical noise)."""
    p = model.channel(channel)
    if p.sigma_classical == 0:
        return math.inf
    return 10 * math.log10(p.sigma_quantum**2 / p.sigma_classical**2)


def _word_bytes(bits):
    return -(-bits // 8)


def write_raw_file(path, samples, sample_bits=16, metadata=None):
    """Write samples as little-endian words; ``metadata`` goes to ``<path>.meta``."""
    samples = np.asarray(samples)
    if samples.size and (samples.min() < 0 or int(samples.max()) >> sample_bits):
        raise UsageError(f"samples do not fit in {sample_bits} bits")
    width = _word_bytes(sample_bits)
    wide = samples.astype("<u8").view(np.uint8).reshape(-1, 8)[:, :width]
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(wide).tobytes())
    if metadata is not None:
        write_metadata(str(path) + META_SUFFIX, metadata)


def read_raw_file(path, sample_bits=16):
    """Read a raw sample file; the sidecar metadata is used when present."""
    width = _word_bytes(sample_bits)
    data = np.fromfile(path, dtype=np.uint8)
    if data.size % width:
        whole = data.size - data.size % width
        raise DataFormatError(
            f"{path}: {data.size} bytes is not a multiple of the {width}-byte word size",
            offset=whole,
        )
    words = data.reshape(-1, width)
    if width in (1, 2, 4, 8):
        samples = words.reshape(-1).view(f"<u{width}")
    else:
        padded = np.zeros((len(words), 8), dtype=np.uint8)
        padded[:, :width] = words
        samples = padded.view("<u8").reshape(-1)
    samples = samples.astype(_sample_dtype(sample_bits))
    if samples.size and sample_bits < width * 8:
        bad = np.flatnonzero(samples.astype(np.uint64) >> np.uint64(sample_bits))
        if bad.size:
            raise DataFormatError(
                f"{path}: sample {bad[0]} exceeds {sample_bits} bits", offset=int(bad[0]) * width
            )
    meta_path = str(path) + META_SUFFIX
    metadata = read_metadata(meta_path) if os.path.exists(meta_path) else {}
    if "bits" in metadata and int(metadata["bits"]) != sample_bits:
        raise DataFormatError(f"{meta_path}: bits={metadata['bits']} but {sample_bits} requested")
    return RawSampleStream(samples, sample_bits, metadata)


def iter_raw_file(path, sample_bits=16, chunk_samples=1 << 20):
    """Yield sample chunks from a raw file without loading it whole."""
    width = _word_bytes(sample_bits)
    if width not in (1, 2, 4, 8):
        yield read_raw_file(path, sample_bits).samples
        return
    dtype = np.dtype(f"<u{width}")
    offset = 0
    with open(path, "rb") as fh:
        while True:
            buf = fh.read(chunk_samples * width)
            if not buf:
                return
            if len(buf) % width:
                raise DataFormatError(
                    f"{path}: trailing partial word", offset=offset + len(buf) - len(buf) % width
                )
            offset += len(buf)
            yield np.frombuffer(buf, dtype=dtype)


def write_metadata(path, mapping):
    with open(path, "w") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}: {value}\n")


def read_metadata(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise DataFormatError(f"{path}:{lineno}: expected 'key: value'")
            out[key.strip()] = value.strip()
    return out
