import math

import numpy as np
import pytest
from scipy import stats as sps

from toeplitz_qrng import ConfigurationError, DataFormatError, UsageError
from toeplitz_qrng.planner import quantized_gaussian_probabilities
from toeplitz_qrng.source_sim import (
    ChannelGenerator,
    ChannelModel,
    SourceModel,
    default_model,
    generate,
    iter_raw_file,
    read_metadata,
    read_raw_file,
    snr_db,
    write_raw_file,
)


def single(sigma, classical=0.0, bits=16, seed=7, lag1=0.0):
    return SourceModel((ChannelModel("ch", sigma, classical, bits, lag1_correlation=lag1),), seed)


class TestModel:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"sigma_quantum": 0.0},
            {"sigma_quantum": 1.0, "sigma_classical": -1.0},
            {"sigma_quantum": 1.0, "adc_bits": 0},
            {"sigma_quantum": 1.0, "adc_range": -5.0},
            {"sigma_quantum": 1.0, "lag1_correlation": 1.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            ChannelModel("x", **kwargs)

    def test_default_range_is_codes(self):
        assert ChannelModel("x", 1.0, adc_bits=12).code_width == 1.0

    def test_channel_index(self):
        with pytest.raises(ConfigurationError):
            default_model().channel(3)

    def test_seed_range(self):
        with pytest.raises(ConfigurationError):
            SourceModel((ChannelModel("x", 1.0),), 2**64)

    def test_default_model_shape(self):
        m = default_model()
        assert [c.label for c in m.channels] == ["200MHz", "600MHz", "1GHz"]
        for i in range(3):
            assert snr_db(m, i) == pytest.approx(12.0)


class TestSnr:
    def test_equal(self):
        assert snr_db(single(5.0, 5.0), 0) == pytest.approx(0.0)

    def test_twenty(self):
        assert snr_db(single(10.0, 1.0), 0) == pytest.approx(20.0)

    def test_ten_db_floor(self):
        assert snr_db(single(math.sqrt(10.0), 1.0), 0) == pytest.approx(10.0)

    def test_no_classical(self):
        assert snr_db(single(5.0), 0) == math.inf


class TestGenerate:
    def test_empty(self):
        s = generate(default_model(), 0, 0)
        assert len(s) == 0

    def test_negative(self):
        with pytest.raises(UsageError):
            generate(default_model(), 0, -1)

    def test_collapse_to_midpoint(self):
        s = generate(single(1e-4), 0, 1000)
        assert (s.samples == 1 << 15).all()

    def test_range(self):
        s = generate(single(200.0, bits=8), 0, 10_000)
        assert s.samples.dtype == np.uint8
        assert s.samples.min() == 0 and s.samples.max() == 255

    def test_deterministic(self):
        a = generate(default_model(3), 1, 5000).samples
        b = generate(default_model(3), 1, 5000).samples
        c = generate(default_model(4), 1, 5000).samples
        assert (a == b).all() and not (a == c).all()

    def test_chunked_reads_match(self):
        model = default_model(11)
        whole = generate(model, 2, 10_000).samples
        gen = ChannelGenerator(model, 2)
        parts = np.concatenate([gen.read(n) for n in (1, 0, 999, 4000, 5000)])
        assert (parts == whole).all()

    def test_metadata(self):
        s = generate(default_model(5), 1, 10)
        assert s.metadata["channel_label"] == "600MHz" and s.metadata["prng_seed"] == 5

    @pytest.mark.parametrize("lag1", [0.0, 0.3])
    def test_histogram_matches_quantized_gaussian(self, lag1):
        sigma, count = 6.0, 200_000
        s = generate(single(sigma, lag1=lag1), 0, count).samples.astype(np.int64)
        p = quantized_gaussian_probabilities(sigma, 16)
        mid = 1 << 15
        lo, hi = mid - 18, mid + 18
        expected = np.concatenate([[p[:lo].sum()], p[lo : hi + 1], [p[hi + 1 :].sum()]]) * count
        # cell 0 is the low tail, the last cell the high tail
        observed = np.bincount(np.clip(s, lo - 1, hi + 1) - (lo - 1), minlength=hi - lo + 3)
        assert observed.sum() == count
        keep = expected >= 5
        obs, exp = observed[keep], expected[keep]
        exp = exp * obs.sum() / exp.sum()
        # AR(1) correlation leaves the marginal intact but inflates the
        # variance of the statistic, so the threshold is generous
        assert sps.chisquare(obs, exp).pvalue > 1e-4

    def test_lag1_correlation_present(self):
        s = generate(single(3000.0, lag1=0.2), 0, 200_000).samples.astype(float)
        s -= s.mean()
        r1 = np.dot(s[:-1], s[1:]) / np.dot(s, s)
        assert r1 == pytest.approx(0.2, abs=0.01)

    def test_channel_independence(self):
        model = default_model(99)
        n = 100_000
        x = generate(model, 0, n).samples.astype(float)
        y = generate(model, 1, n).samples.astype(float)
        x = (x - x.mean()) / x.std()
        y = (y - y.mean()) / y.std()
        bound = 4 / math.sqrt(n)
        for lag in range(0, 50):
            assert abs(np.dot(x[lag:], y[: n - lag]) / n) < bound
            assert abs(np.dot(y[lag:], x[: n - lag]) / n) < bound


class TestFiles:
    def test_round_trip(self, tmp_path):
        s = generate(default_model(1), 0, 1000)
        path = tmp_path / "raw.bin"
        write_raw_file(path, s.samples, 16, s.metadata)
        back = read_raw_file(path, 16)
        assert (back.samples == s.samples).all()
        assert back.metadata["channel_label"] == "200MHz"
        assert path.stat().st_size == 2000

    def test_little_endian(self, tmp_path):
        path = tmp_path / "le.bin"
        path.write_bytes(bytes([0x34, 0x12, 0xFF, 0x00]))
        assert read_raw_file(path, 16).samples.tolist() == [0x1234, 0x00FF]

    def test_empty(self, tmp_path):
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        assert len(read_raw_file(path)) == 0

    def test_96_bytes(self, tmp_path):
        path = tmp_path / "block.bin"
        path.write_bytes(bytes(range(96)))
        assert len(read_raw_file(path)) == 48

    def test_truncated(self, tmp_path):
        path = tmp_path / "odd.bin"
        path.write_bytes(bytes(97))
        with pytest.raises(DataFormatError) as info:
            read_raw_file(path)
        assert info.value.offset == 96
        assert "96" in str(info.value)

    def test_value_too_wide(self, tmp_path):
        path = tmp_path / "wide.bin"
        write_raw_file(path, [1, 2, 4095, 4096], 16)
        with pytest.raises(DataFormatError) as info:
            read_raw_file(path, 12)
        assert info.value.offset == 6

    def test_three_byte_words(self, tmp_path):
        path = tmp_path / "w24.bin"
        values = np.array([0, 1, (1 << 24) - 1, 0x123456])
        write_raw_file(path, values, 24)
        assert path.stat().st_size == 12
        assert read_raw_file(path, 24).samples.tolist() == values.tolist()

    def test_meta_bits_conflict(self, tmp_path):
        path = tmp_path / "m.bin"
        write_raw_file(path, [1, 2], 16, {"bits": 12})
        with pytest.raises(DataFormatError):
            read_raw_file(path, 16)

    def test_bad_metadata_line(self, tmp_path):
        meta = tmp_path / "x.meta"
        meta.write_text("bits: 16\nnonsense\n")
        with pytest.raises(DataFormatError):
            read_metadata(meta)

    def test_iter_matches_read(self, tmp_path):
        s = generate(default_model(2), 0, 10_001).samples
        path = tmp_path / "it.bin"
        write_raw_file(path, s)
        chunks = list(iter_raw_file(path, 16, chunk_samples=4096))
        assert len(chunks) == 3
        assert (np.concatenate(chunks) == s).all()

    def test_write_rejects_wide(self, tmp_path):
        with pytest.raises(UsageError):
            write_raw_file(tmp_path / "bad.bin", [1 << 16], 16)
