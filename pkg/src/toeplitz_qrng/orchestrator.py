"""Multi-channel extraction runs.

Every channel owns an :class:`~toeplitz_qrng.pipeline.ExtractorState` and
runs in its own worker thread (the packed kernel releases the GIL). Workers
hand completed blocks to a collector, which writes them round-robin by
block index in ascending channel order: block 1 of channel 0, block 1 of
channel 1, ..., block 2 of channel 0, and so on. A channel that runs out of
blocks simply drops out of later rounds. The output therefore depends only
on the inputs, never on thread scheduling.

Run configuration is an INI file::

    [run]
    output = out.bin              ; packed LSB-first bitstream
    samples_per_channel = 480000  ; required for simulated inputs
    master_seed = 1               ; seeds derived from this when no seed_file
    workers = 3
    chunk_samples = 196608

    [source]                      ; only needed for simulated inputs
    prng_seed = 7
    snr_db = 12
    lag1_correlation = 0.05

    [channel.0]
    m = 519
    n = 768
    k = 16
    label = 200MHz
    input = raw0.bin              ; or "simulate"
    seed_file = seed0.bin         ; optional, packed LSB-first

Relative paths are resolved against the config file's directory.
"""

import configparser
import hashlib
import io
import logging
import os
import queue
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bits import as_bits
from .errors import ConfigurationError, DataFormatError, UsageError
from .gf2_toeplitz import ExtractorDims, Seed
from .pipeline import new_extractor
from .planner import throughput
from .source_sim import (
    DEFAULT_LAG1_CORRELATION,
    DEFAULT_SNR_DB,
    ChannelGenerator,
    ChannelModel,
    SourceModel,
    _split_sigma,
    default_model,
    iter_raw_file,
    write_metadata,
)

log = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest"
INTERLEAVE = "round-robin-block"
DEFAULT_CHUNK_SAMPLES = 48 * 4096


@dataclass
class ChannelConfig:
    """One extractor channel.

    Exactly one of ``input_path`` and ``source`` is set; ``source`` is a
    :class:`SourceModel` and ``source_channel`` picks the channel in it.
    """

    dims: ExtractorDims
    seed: Seed
    label: str = ""
    input_path: str = None
    source: SourceModel = None
    source_channel: int = 0
    sample_bits: int = 16
    seed_origin: str = "given"

    def __post_init__(self):
        self.seed.check(self.dims)
        if (self.input_path is None) == (self.source is None):
            raise ConfigurationError(f"channel {self.label!r}: give exactly one of input_path, source")
        if self.sample_bits != self.dims.k:
            raise ConfigurationError(
                f"channel {self.label!r}: sample width {self.sample_bits} != k={self.dims.k}"
            )

    def describe_input(self):
        if self.input_path is not None:
            return os.path.basename(self.input_path)
        return f"simulate:prng_seed={self.source.prng_seed}:channel={self.source_channel}"


@dataclass
class RunConfig:
    channels: list
    output: str = None
    samples_per_channel: int = None
    workers: int = None
    chunk_samples: int = DEFAULT_CHUNK_SAMPLES
    master_seed: int = None
    interleave: str = INTERLEAVE

    def __post_init__(self):
        if not self.channels:
            raise ConfigurationError("run needs at least one channel")
        if self.interleave != INTERLEAVE:
            raise ConfigurationError(f"unsupported interleave {self.interleave!r}")
        seen = set()
        for ch in self.channels:
            key = ch.seed.bits.tobytes()
            if key in seen:
                raise ConfigurationError(f"channel {ch.label!r} reuses another channel's seed")
            seen.add(key)
            if ch.source is not None and self.samples_per_channel is None:
                raise ConfigurationError("simulated channels need samples_per_channel")
        if self.samples_per_channel is not None and self.samples_per_channel < 0:
            raise ConfigurationError("samples_per_channel must be >= 0")
        if self.chunk_samples < 1:
            raise ConfigurationError("chunk_samples must be >= 1")


@dataclass
class ChannelMetrics:
    label: str
    dims: ExtractorDims
    samples_in: int = 0
    samples_discarded: int = 0
    blocks: int = 0
    busy_seconds: float = 0.0

    @property
    def bits_in(self):
        return self.samples_in * self.dims.k

    @property
    def bits_out(self):
        return self.blocks * self.dims.m


@dataclass
class ExtractionResult:
    data: bytes
    total_bits: int
    manifest: dict
    metrics: list
    wall_seconds: float
    interleave_order: list = field(default_factory=list)

    def bits(self):
        raw = np.frombuffer(self.data, dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.total_bits]


def derive_seed(master_seed, channel, dims):
    """Deterministic seed for ``channel`` from a recorded master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(0x5EED, channel))
    return Seed.random(dims.seed_length, np.random.default_rng(ss))


def _sample_chunks(ch, limit, chunk):
    if ch.input_path is not None:
        remaining = limit
        for part in iter_raw_file(ch.input_path, ch.sample_bits, chunk):
            if remaining is not None:
                if remaining <= 0:
                    return
                part = part[:remaining]
                remaining -= len(part)
            yield part
        return
    gen = ChannelGenerator(ch.source, ch.source_channel)
    if gen.params.adc_bits != ch.sample_bits:
        raise ConfigurationError(
            f"channel {ch.label!r}: simulator produces {gen.params.adc_bits}-bit samples"
        )
    remaining = limit
    while remaining > 0:
        take = min(chunk, remaining)
        remaining -= take
        yield gen.read(take)


def _channel_worker(ch, limit, chunk, out_queue, metrics):
    try:
        state = new_extractor(ch.dims, ch.seed)
        for samples in _sample_chunks(ch, limit, chunk):
            t0 = time.perf_counter()
            words = state.ingest_samples_words(samples, ch.sample_bits)
            blocks = state.tables.to_bits(words)
            metrics.busy_seconds += time.perf_counter() - t0
            metrics.samples_in += len(samples)
            if len(blocks):
                metrics.blocks += len(blocks)
                out_queue.put(blocks)
        if state.step_index:
            metrics.samples_discarded = state.step_index
            log.warning(
                "channel %s: input ended mid-block, discarding %d samples",
                ch.label, state.step_index,
            )
            state.reset()
    except BaseException as exc:
        out_queue.put(exc)
        raise
    finally:
        out_queue.put(None)


class _BitWriter:
    """Packs a growing bitstream LSB-first into a binary sink."""

    def __init__(self, sink):
        self.sink = sink
        self.pending = np.zeros(0, dtype=np.uint8)
        self.total_bits = 0

    def write(self, bits):
        self.total_bits += bits.size
        if self.pending.size:
            bits = np.concatenate([self.pending, bits])
        whole = bits.size - bits.size % 8
        if whole:
            self.sink.write(np.packbits(bits[:whole], bitorder="little").tobytes())
        self.pending = bits[whole:].copy()

    def close(self):
        if self.pending.size:
            self.sink.write(np.packbits(self.pending, bitorder="little").tobytes())
            self.pending = np.zeros(0, dtype=np.uint8)


def _collect(queues, writer, order):
    """Round-robin emission from per-channel block queues."""
    nch = len(queues)
    buffers = [deque() for _ in range(nch)]
    available = [0] * nch
    done = [False] * nch
    emitted = [0] * nch

    def pull(c, block):
        try:
            item = queues[c].get(block)
        except queue.Empty:
            return False
        if item is None:
            done[c] = True
        elif isinstance(item, BaseException):
            raise item
        else:
            buffers[c].append(item)
            available[c] += len(item)
        return True

    def take(c, count):
        parts = []
        while count:
            head = buffers[c][0]
            if len(head) <= count:
                parts.append(buffers[c].popleft())
                count -= len(head)
            else:
                parts.append(head[:count])
                buffers[c][0] = head[count:]
                count = 0
        return np.concatenate(parts) if len(parts) > 1 else parts[0]

    while True:
        active = [c for c in range(nch) if available[c] or not done[c]]
        if not active:
            break
        # a round can only go out once every live channel has a block for it
        starving = [c for c in active if not available[c]]
        if starving:
            pull(starving[0], True)
            continue
        for c in active:
            while not done[c] and pull(c, False):
                pass
        rounds = min(available[c] for c in active)
        rows = []
        for c in active:
            rows.append(take(c, rounds))
            available[c] -= rounds
            emitted[c] += rounds
        writer.write(np.concatenate(rows, axis=1).ravel())
        order.append((tuple(active), rounds))
    return emitted


def run_extraction(config, workers=None):
    """Run every channel and interleave their blocks.

    ``workers`` overrides ``config.workers``; it changes only the degree of
    parallelism, never the output. When ``config.output`` is set the stream
    and its manifest are also written to disk.
    """
    channels = config.channels
    workers = workers or config.workers or len(channels)
    metrics = [ChannelMetrics(ch.label, ch.dims) for ch in channels]
    queues = [queue.Queue() for _ in channels]
    sink = io.BytesIO()
    writer = _BitWriter(sink)
    order = []

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="channel") as pool:
        futures = [
            pool.submit(
                _channel_worker, ch, config.samples_per_channel, config.chunk_samples, q, mt
            )
            for ch, q, mt in zip(channels, queues, metrics)
        ]
        try:
            emitted = _collect(queues, writer, order)
        finally:
            for fut in futures:
                fut.exception()
    writer.close()
    wall = time.perf_counter() - t0

    for mt, count in zip(metrics, emitted):
        if mt.blocks != count:
            raise RuntimeError(f"channel {mt.label}: produced {mt.blocks}, emitted {count}")
    data = sink.getvalue()
    manifest = build_manifest(config, metrics, writer.total_bits, len(data))
    result = ExtractionResult(data, writer.total_bits, manifest, metrics, wall, order)
    if config.output:
        with open(config.output, "wb") as fh:
            fh.write(data)
        write_metadata(config.output + MANIFEST_SUFFIX, manifest)
    return result


def build_manifest(config, metrics, total_bits, nbytes):
    """Deterministic provenance record (no timings)."""
    out = {
        "format": "toeplitz-qrng-extract/1",
        "bit_packing": "lsb-first",
        "interleave": config.interleave,
        "channels": len(config.channels),
        "samples_per_channel": (
            "all" if config.samples_per_channel is None else config.samples_per_channel
        ),
        "master_seed": "none" if config.master_seed is None else config.master_seed,
        "total_bits": total_bits,
        "output_bytes": nbytes,
    }
    for i, (ch, mt) in enumerate(zip(config.channels, metrics)):
        pre = f"channel.{i}."
        out[pre + "label"] = ch.label
        out[pre + "m"] = ch.dims.m
        out[pre + "n"] = ch.dims.n
        out[pre + "k"] = ch.dims.k
        out[pre + "input"] = ch.describe_input()
        out[pre + "seed_origin"] = ch.seed_origin
        out[pre + "seed_sha256"] = hashlib.sha256(ch.seed.to_bytes()).hexdigest()
        out[pre + "samples_in"] = mt.samples_in
        out[pre + "samples_discarded"] = mt.samples_discarded
        out[pre + "blocks"] = mt.blocks
        out[pre + "bits_out"] = mt.bits_out
    return out


@dataclass
class MeterReport:
    per_channel: list
    aggregate_raw_bps: float
    aggregate_out_bps: float
    modeled_raw_bps: float
    modeled_out_bps: float
    clock_hz: float
    timer_suspect: bool

    def to_dict(self):
        out = {
            "clock_hz": self.clock_hz,
            "measured_aggregate_raw_bps": f"{self.aggregate_raw_bps:.6g}",
            "measured_aggregate_out_bps": f"{self.aggregate_out_bps:.6g}",
            "modeled_aggregate_raw_bps": f"{self.modeled_raw_bps:.6g}",
            "modeled_aggregate_out_bps": f"{self.modeled_out_bps:.6g}",
            "timer_suspect": str(self.timer_suspect).lower(),
        }
        for i, row in enumerate(self.per_channel):
            for key, value in row.items():
                out[f"channel.{i}.{key}"] = value
        return out


def meter(metrics, wall_seconds, clock_hz=240e6):
    """Measured versus modeled throughput.

    Measured aggregate figures divide by wall-clock time; per-channel ones by
    each channel's busy time. The modeled figures assume one ``k``-bit word
    per channel per clock. Software beating the modeled hardware rate means
    the timer is wrong, and is flagged.
    """
    model = throughput([mt.dims for mt in metrics], clock_hz)
    rows = []
    for mt, raw_model, out_model in zip(metrics, model.raw_bps, model.output_bps):
        busy = mt.busy_seconds or float("nan")
        rows.append({
            "label": mt.label,
            "measured_raw_bps": f"{mt.bits_in / busy:.6g}",
            "measured_out_bps": f"{mt.bits_out / busy:.6g}",
            "modeled_raw_bps": f"{raw_model:.6g}",
            "modeled_out_bps": f"{out_model:.6g}",
        })
    wall = wall_seconds if wall_seconds > 0 else float("nan")
    agg_raw = sum(mt.bits_in for mt in metrics) / wall
    agg_out = sum(mt.bits_out for mt in metrics) / wall
    suspect = not (agg_out < model.aggregate_output_bps)
    return MeterReport(
        rows, agg_raw, agg_out, model.aggregate_raw_bps, model.aggregate_output_bps,
        clock_hz, suspect,
    )


def _get(section, key, cast=str, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigurationError(f"[{section.name}] missing '{key}'")
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigurationError(f"[{section.name}] bad value for '{key}': {exc}") from None


def load_config(path):
    """Parse an INI run configuration (see module docstring)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    run = parser["run"] if parser.has_section("run") else parser["DEFAULT"]
    output = _get(run, "output")
    master_seed = _get(run, "master_seed", int)
    limit = _get(run, "samples_per_channel", int)

    source = None
    names = sorted(
        (s for s in parser.sections() if s.startswith("channel.")),
        key=lambda s: int(s.split(".", 1)[1]) if s.split(".", 1)[1].isdigit() else s,
    )
    if not names:
        raise ConfigurationError(f"{path}: no [channel.N] sections")
    if any(parser[s].get("input", "").strip() == "simulate" for s in names):
        src = parser["source"] if parser.has_section("source") else parser["DEFAULT"]
        prng_seed = _get(src, "prng_seed", int, 0)
        snr = _get(src, "snr_db", float, DEFAULT_SNR_DB)
        corr = _get(src, "lag1_correlation", float, DEFAULT_LAG1_CORRELATION)
        base_model = default_model(prng_seed, snr, corr)
        models = []
        for idx, name in enumerate(names):
            sec = parser[name]
            fallback = base_model.channels[idx % len(base_model.channels)]
            total = _get(sec, "sigma_total", float, fallback.sigma_total)
            q, c = _split_sigma(total, snr)
            models.append(ChannelModel(
                _get(sec, "label", str, fallback.label), q, c,
                adc_bits=_get(sec, "k", int, 16), lag1_correlation=corr,
            ))
        source = SourceModel(tuple(models), prng_seed)

    channels = []
    for idx, name in enumerate(names):
        sec = parser[name]
        dims = ExtractorDims(
            _get(sec, "m", int, required=True),
            _get(sec, "n", int, required=True),
            _get(sec, "k", int, required=True),
        )
        default_label = source.channels[idx].label if source is not None else f"ch{idx}"
        label = _get(sec, "label", str, default_label)
        seed_file = _get(sec, "seed_file")
        if seed_file:
            seed_path = resolve(seed_file)
            try:
                with open(seed_path, "rb") as fh:
                    seed_bytes = fh.read()
            except OSError as exc:
                raise ConfigurationError(f"cannot read seed {seed_path}: {exc}") from None
            try:
                seed = Seed.from_bytes(seed_bytes, dims.seed_length)
            except UsageError as exc:
                raise ConfigurationError(f"{seed_path}: {exc}") from None
            origin = f"file:{os.path.basename(seed_path)}"
        elif master_seed is not None:
            seed = derive_seed(master_seed, idx, dims)
            origin = f"master_seed:{master_seed}:channel={idx}"
        else:
            raise ConfigurationError(f"[{name}] needs seed_file or [run] master_seed")
        inp = _get(sec, "input", str, required=True).strip()
        if inp == "simulate":
            channels.append(ChannelConfig(dims, seed, label, source=source, source_channel=idx,
                                          sample_bits=dims.k, seed_origin=origin))
        else:
            in_path = resolve(inp)
            if not os.path.exists(in_path):
                raise ConfigurationError(f"[{name}] input {in_path} does not exist")
            channels.append(ChannelConfig(dims, seed, label, input_path=in_path,
                                          sample_bits=dims.k, seed_origin=origin))

    return RunConfig(
        channels,
        output=resolve(output) if output else None,
        samples_per_channel=limit,
        workers=_get(run, "workers", int),
        chunk_samples=_get(run, "chunk_samples", int, DEFAULT_CHUNK_SAMPLES),
        master_seed=master_seed,
    )


def read_extracted(path):
    """Load an ``extract`` output and its manifest; returns ``(bits, manifest)``."""
    from .source_sim import read_metadata

    manifest_path = path + MANIFEST_SUFFIX
    manifest = read_metadata(manifest_path) if os.path.exists(manifest_path) else {}
    raw = np.fromfile(path, dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    if "total_bits" in manifest:
        total = int(manifest["total_bits"])
        if total > bits.size:
            raise DataFormatError(f"{path}: manifest claims {total} bits, file has {bits.size}")
        bits = bits[:total]
    return as_bits(bits), manifest

