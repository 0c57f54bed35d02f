import logging

import numpy as np
import pytest

from toeplitz_qrng import ConfigurationError, DataFormatError, ExtractorDims, Seed, matvec_full
from toeplitz_qrng.bits import samples_to_bits
from toeplitz_qrng.orchestrator import (
    ChannelConfig,
    RunConfig,
    derive_seed,
    load_config,
    meter,
    read_extracted,
    run_extraction,
)
from toeplitz_qrng.source_sim import default_model, generate, write_raw_file

REFERENCE_DIMS = [ExtractorDims(m, 768, 16) for m in (519, 548, 581)]


def raw_channels(tmp_path, rng, dims_list, samples, seeds=None):
    channels, streams = [], []
    for i, dims in enumerate(dims_list):
        s = rng.integers(0, 1 << dims.k, samples[i] if np.ndim(samples) else samples, dtype=np.uint16)
        path = tmp_path / f"in{i}.raw"
        write_raw_file(path, s, dims.k)
        seed = seeds[i] if seeds else Seed.random(dims.seed_length, rng)
        channels.append(ChannelConfig(dims, seed, f"ch{i}", input_path=str(path), sample_bits=dims.k))
        streams.append(s)
    return channels, streams


def expected_blocks(ch, samples):
    dims = ch.dims
    nblocks = len(samples) // dims.steps
    raw = samples_to_bits(samples[: nblocks * dims.steps], dims.k).reshape(nblocks, dims.n)
    return matvec_full(ch.seed, dims, raw)


class TestConfig:
    def test_seed_reuse_rejected(self, tmp_path, rng):
        seed = Seed.random(1286, rng)
        chans, _ = raw_channels(tmp_path, rng, REFERENCE_DIMS[:1] * 2, 48, seeds=[seed, seed])
        with pytest.raises(ConfigurationError):
            RunConfig(chans)

    def test_seed_dims_mismatch(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ChannelConfig(REFERENCE_DIMS[0], Seed(np.zeros(10, np.uint8)), input_path=str(tmp_path / "x"))

    def test_sample_width_must_equal_k(self, rng, tmp_path):
        with pytest.raises(ConfigurationError):
            ChannelConfig(REFERENCE_DIMS[0], Seed.random(1286, rng), input_path="x", sample_bits=12)

    def test_needs_channels(self):
        with pytest.raises(ConfigurationError):
            RunConfig([])

    def test_simulated_needs_limit(self, rng):
        ch = ChannelConfig(REFERENCE_DIMS[0], Seed.random(1286, rng), source=default_model())
        with pytest.raises(ConfigurationError):
            RunConfig([ch])

    def test_derived_seeds_distinct_and_stable(self):
        a = [derive_seed(5, i, REFERENCE_DIMS[i]) for i in range(3)]
        b = [derive_seed(5, i, REFERENCE_DIMS[i]) for i in range(3)]
        assert a == b
        assert a[0].bits.tobytes() != a[1].bits[:1286].tobytes()


class TestRun:
    def test_round_robin_order(self, tmp_path, rng):
        blocks = 5
        chans, streams = raw_channels(tmp_path, rng, REFERENCE_DIMS, 48 * blocks)
        result = run_extraction(RunConfig(chans, chunk_samples=100))
        per_channel = [expected_blocks(c, s) for c, s in zip(chans, streams)]
        expected = np.concatenate([per_channel[c][b] for b in range(blocks) for c in range(3)])
        assert result.total_bits == blocks * (519 + 548 + 581)
        assert (result.bits() == expected).all()

    def test_single_channel_identity(self, tmp_path, rng):
        chans, streams = raw_channels(tmp_path, rng, REFERENCE_DIMS[:1], 48 * 7 + 5)
        result = run_extraction(RunConfig(chans))
        assert (result.bits() == expected_blocks(chans[0], streams[0]).ravel()).all()

    def test_unequal_lengths(self, tmp_path, rng):
        dims = [ExtractorDims(5, 8, 4), ExtractorDims(3, 8, 4)]
        chans, streams = raw_channels(tmp_path, rng, dims, [2 * 4, 2 * 2])
        result = run_extraction(RunConfig(chans, chunk_samples=3))
        a, b = (expected_blocks(c, s) for c, s in zip(chans, streams))
        expected = np.concatenate([a[0], b[0], a[1], b[1], a[2], a[3]])
        assert (result.bits() == expected).all()
        assert result.manifest["channel.0.blocks"] == 4
        assert result.manifest["channel.1.blocks"] == 2

    @pytest.mark.parametrize("workers", [1, 2, 3])
    def test_independent_of_workers_and_chunking(self, tmp_path, rng, workers):
        chans, _ = raw_channels(tmp_path, np.random.default_rng(3), REFERENCE_DIMS, 48 * 20 + 11)
        ref = run_extraction(RunConfig(chans, chunk_samples=48 * 20 + 11), workers=1)
        got = run_extraction(RunConfig(chans, chunk_samples=int(rng.integers(1, 200))), workers=workers)
        assert got.data == ref.data and got.manifest == ref.manifest

    def test_partial_block_discarded(self, tmp_path, rng, caplog):
        chans, streams = raw_channels(tmp_path, rng, REFERENCE_DIMS[:1], 48 * 2 + 30)
        with caplog.at_level(logging.WARNING):
            result = run_extraction(RunConfig(chans))
        assert result.metrics[0].samples_discarded == 30
        assert result.total_bits == 2 * 519
        assert "discarding 30 samples" in caplog.text

    def test_zero_input_gives_zero_output(self, tmp_path, rng):
        path = tmp_path / "zero.raw"
        write_raw_file(path, np.zeros(48 * 4, np.uint16))
        ch = ChannelConfig(REFERENCE_DIMS[0], Seed.random(1286, rng), input_path=str(path))
        result = run_extraction(RunConfig([ch]))
        assert result.total_bits == 4 * 519 and not result.bits().any()

    def test_conservation(self, tmp_path, rng):
        chans, _ = raw_channels(tmp_path, rng, REFERENCE_DIMS, [48 * 3, 48 * 4 + 1, 48])
        result = run_extraction(RunConfig(chans))
        m = result.manifest
        assert sum(m[f"channel.{i}.blocks"] * m[f"channel.{i}.m"] for i in range(3)) == result.total_bits
        assert m["output_bytes"] == len(result.data) == -(-result.total_bits // 8)

    def test_sample_limit(self, tmp_path, rng):
        chans, streams = raw_channels(tmp_path, rng, REFERENCE_DIMS[:1], 48 * 10)
        result = run_extraction(RunConfig(chans, samples_per_channel=48 * 3))
        assert result.total_bits == 3 * 519
        assert (result.bits() == expected_blocks(chans[0], streams[0][: 48 * 3]).ravel()).all()

    def test_simulated_matches_file(self, tmp_path):
        model = default_model(21)
        seed = derive_seed(1, 0, REFERENCE_DIMS[1])
        sim = ChannelConfig(REFERENCE_DIMS[1], seed, source=model, source_channel=1)
        samples = generate(model, 1, 48 * 6).samples
        path = tmp_path / "sim.raw"
        write_raw_file(path, samples)
        from_file = ChannelConfig(REFERENCE_DIMS[1], seed, input_path=str(path))
        a = run_extraction(RunConfig([sim], samples_per_channel=48 * 6, chunk_samples=50))
        b = run_extraction(RunConfig([from_file]))
        assert a.data == b.data

    def test_bad_input_surfaces(self, tmp_path, rng):
        path = tmp_path / "odd.raw"
        path.write_bytes(bytes(7))
        ch = ChannelConfig(REFERENCE_DIMS[0], Seed.random(1286, rng), input_path=str(path))
        with pytest.raises(DataFormatError):
            run_extraction(RunConfig([ch]))

    def test_writes_output_and_manifest(self, tmp_path, rng):
        chans, _ = raw_channels(tmp_path, rng, REFERENCE_DIMS, 48 * 2)
        out = tmp_path / "out.bin"
        result = run_extraction(RunConfig(chans, output=str(out)))
        bits, manifest = read_extracted(str(out))
        assert (bits == result.bits()).all()
        assert manifest["total_bits"] == str(result.total_bits)
        assert manifest["interleave"] == "round-robin-block"


class TestMeter:
    def test_modeled_rate(self, tmp_path, rng):
        chans, _ = raw_channels(tmp_path, rng, REFERENCE_DIMS, 48 * 50)
        result = run_extraction(RunConfig(chans))
        rep = meter(result.metrics, result.wall_seconds)
        assert rep.modeled_out_bps / 1e9 == pytest.approx(8.24, abs=0.01)
        assert not rep.timer_suspect
        assert rep.to_dict()["timer_suspect"] == "false"

    def test_impossible_rate_flagged(self, tmp_path, rng):
        chans, _ = raw_channels(tmp_path, rng, REFERENCE_DIMS, 48 * 50)
        result = run_extraction(RunConfig(chans))
        assert meter(result.metrics, 1e-12).timer_suspect


class TestLoadConfig:
    def write(self, tmp_path, text):
        path = tmp_path / "run.ini"
        path.write_text(text)
        return str(path)

    def test_simulated(self, tmp_path):
        cfg = load_config(self.write(tmp_path, """
[run]
output = out.bin
samples_per_channel = 960
master_seed = 4

[source]
prng_seed = 9

[channel.0]
m = 519
n = 768
k = 16
input = simulate

[channel.1]
m = 548
n = 768
k = 16
input = simulate
"""))
        assert len(cfg.channels) == 2 and cfg.output == str(tmp_path / "out.bin")
        assert cfg.channels[1].source.prng_seed == 9
        assert cfg.channels[1].label == "600MHz"
        result = run_extraction(cfg)
        assert result.total_bits == 20 * (519 + 548)

    def test_seed_file_and_raw_input(self, tmp_path, rng):
        seed = Seed.random(1286, rng)
        (tmp_path / "seed.bin").write_bytes(seed.to_bytes())
        write_raw_file(tmp_path / "a.raw", rng.integers(0, 1 << 16, 96, dtype=np.uint16))
        cfg = load_config(self.write(tmp_path, """
[run]
[channel.0]
m = 519
n = 768
k = 16
input = a.raw
seed_file = seed.bin
"""))
        assert cfg.channels[0].seed == seed
        assert cfg.channels[0].seed_origin == "file:seed.bin"

    @pytest.mark.parametrize(
        "body",
        [
            "[run]\n",  # no channels
            "[run]\nmaster_seed = 1\n[channel.0]\nm = 519\nn = 768\ninput = simulate\n",  # no k
            "[run]\n[channel.0]\nm = 519\nn = 768\nk = 16\ninput = simulate\n",  # no seed
            "[run]\nmaster_seed = 1\n[channel.0]\nm = 800\nn = 768\nk = 16\ninput = x.raw\n",
            "[run]\nmaster_seed = 1\n[channel.0]\nm = 519\nn = 768\nk = 16\ninput = missing.raw\n",
            "[run]\nmaster_seed = x\n[channel.0]\nm = 519\nn = 768\nk = 16\ninput = simulate\n",
        ],
    )
    def test_invalid(self, tmp_path, body):
        with pytest.raises(ConfigurationError):
            load_config(self.write(tmp_path, body))

    def test_malformed(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_config(self.write(tmp_path, "m = 1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "nope.ini"))
