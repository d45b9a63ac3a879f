import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pnqrng import digitize
from pnqrng.digitize import (ByteBlock, adc_quantize, empty_bin_fraction, histogram, normalize,
                             normalize_stream, post_rate, raw_rate, rate_budget)
from pnqrng.errors import DegenerateRangeError, FormatError, InvalidModelError, RateError
from pnqrng.physics import SampleBlock, SamplerConfig

from . import oracles


def block(values):
    return SampleBlock(np.asarray(values, dtype=float), 4e-9)


class TestNormalize:
    def test_endpoints_and_midpoint(self):
        sym = normalize(block([0.0, 0.5, 1.0])).symbols
        assert sym.tolist() == [0, 128, 255]

    def test_worked_example(self):
        assert normalize(block([-1.0, -0.5, 0.0, 1.0])).symbols.tolist() == [0, 64, 128, 255]

    def test_constant_block(self):
        with pytest.raises(DegenerateRangeError):
            normalize(block([3.0, 3.0, 3.0]))
        with pytest.raises(DegenerateRangeError):
            normalize(block([3.0]))

    def test_records_extrema(self):
        nb = normalize(block([-2.0, 5.0, 1.0]))
        assert nb.source_meta["block_extrema"] == [[-2.0, 5.0]]

    @given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-1e3, 1e3)),
           st.integers(1, 12))
    def test_matches_rational_oracle(self, x, bits):
        assume(np.ptp(x) > 1e-6)
        assert normalize(block(x), bits).symbols.tolist() == oracles.normalize_exact(x, bits)

    @given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-1e3, 1e3)))
    def test_monotone(self, x):
        assume(np.ptp(x) > 1e-6)
        order = np.argsort(x, kind="stable")
        assert np.all(np.diff(normalize(block(x)).symbols[order].astype(int)) >= 0)

    @given(arrays(np.float64, st.integers(2, 60), elements=st.integers(-1000, 1000).map(float)),
           st.sampled_from([0.5, 2.0, 4.0, 1024.0]), st.integers(-100, 100).map(float))
    def test_affine_invariance(self, x, a, b):
        # power-of-two scale and integer shift keep the arithmetic exact
        assume(np.ptp(x) > 0)
        assert np.array_equal(normalize(block(x)).symbols, normalize(block(a * x + b)).symbols)

    def test_stream_blocks(self):
        x = np.random.default_rng(0).standard_normal(10_000)
        nb = normalize_stream(block(x), 8, 4096)
        ext = nb.source_meta["block_extrema"]
        assert len(ext) == 3
        for i, (lo, hi) in enumerate(ext):
            part = x[i * 4096:(i + 1) * 4096]
            assert (lo, hi) == (part.min(), part.max())
            assert np.array_equal(nb.symbols[i * 4096:(i + 1) * 4096], normalize(block(part)).symbols)

    def test_stream_folds_single_trailing_sample(self):
        x = np.arange(4097.0)
        nb = normalize_stream(block(x), 8, 4096)
        assert len(nb.source_meta["block_extrema"]) == 1 and len(nb) == 4097


class TestAdc:
    def test_mid_tread_and_clip(self):
        q = adc_quantize(block([0.0, 0.49, 0.51, -0.51, 1000.0, -1000.0]), full_scale_mv=256.0, bits=8)
        assert q.samples.tolist() == [0.0, 0.0, 1.0, -1.0, 127.0, -128.0]
        assert q.origin["adc_clipped"] == 2

    def test_rejects_bad_scale(self):
        with pytest.raises(InvalidModelError):
            adc_quantize(block([0.0, 1.0]), 0.0)


class TestRates:
    def test_reference(self):
        assert raw_rate(SamplerConfig(250e6, 8)) == 2.0e9
        assert post_rate(2.0e9, 0.5) == 1.0e9

    def test_scaling(self):
        assert raw_rate(SamplerConfig(2.5e9, 8)) == 20e9
        assert raw_rate(SamplerConfig(250e6, 1)) == 250e6
        assert post_rate(2e9, 1.0) == 2e9
        assert post_rate(2e9, 0.25) == 0.5e9

    @pytest.mark.parametrize("eta", [0.0, -0.1, 1.01])
    def test_bad_ratio(self, eta):
        with pytest.raises(RateError):
            post_rate(2e9, eta)

    def test_budget(self):
        b = rate_budget(SamplerConfig(250e6, 8), 0.5)
        assert (b.raw_bps, b.extraction_ratio, b.post_bps) == (2e9, 0.5, 1e9)


class TestHistogram:
    def test_uniform_cycle(self):
        counts = histogram(ByteBlock(np.tile(np.arange(256), 7), 8))
        assert np.all(counts == 7)

    def test_single_symbol(self):
        counts = histogram(ByteBlock(np.full(50, 9), 8))
        assert np.flatnonzero(counts).tolist() == [9]

    @given(arrays(np.uint8, st.integers(1, 500)))
    def test_sums_to_length(self, sym):
        assert histogram(ByteBlock(sym, 8)).sum() == sym.size

    def test_empty_bins(self):
        counts = np.zeros(256, int)
        counts[[10, 12, 14]] = 1
        assert empty_bin_fraction(counts) == pytest.approx(2 / 5)

    def test_csv(self, tmp_path):
        digitize.write_histogram_csv(tmp_path / "h.csv", np.arange(256))
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "symbol,count" and lines[256] == "255,255"


class TestByteBlock:
    def test_symbol_range(self):
        with pytest.raises(InvalidModelError):
            ByteBlock(np.array([256]), 8)
        with pytest.raises(InvalidModelError):
            ByteBlock(np.array([1]), 0)

    def test_packed_bits_msb_first(self):
        data, n = ByteBlock(np.array([0b1010, 0b0001]), 4).packed_bits()
        assert n == 8 and data.tolist() == [0b10100001]
        data, n = ByteBlock(np.array([0x80, 0x01]), 8).packed_bits()
        assert n == 16 and data.tolist() == [0x80, 0x01]

    def test_file_round_trip(self, tmp_path):
        for bits in (8, 12):
            sym = np.random.default_rng(bits).integers(0, 1 << bits, 1000)
            b = ByteBlock(sym, bits)
            path = tmp_path / f"s{bits}.pqnb"
            digitize.write_bytes(path, b)
            raw = path.read_bytes()
            assert raw[:4] == b"PQNB" and len(raw) == 64 + 1000 * (1 if bits <= 8 else 2)
            back = digitize.read_bytes(path)
            assert back.adc_bits == bits and np.array_equal(back.symbols, b.symbols)
            assert back.source_meta["source_hash"] == digitize.source_hash(b).hex()

    def test_bad_file(self, tmp_path):
        (tmp_path / "x.pqnb").write_bytes(b"NOPE" + bytes(60))
        with pytest.raises(FormatError):
            digitize.read_bytes(tmp_path / "x.pqnb")
