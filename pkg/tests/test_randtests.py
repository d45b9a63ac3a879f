import math

import numpy as np
import pytest

from pnqrng import randtests
from pnqrng.errors import InsufficientDataError
from pnqrng.extractor import BitBlock
from pnqrng.randtests import (TEST_NAMES, TestResult, battery_summary, format_report, pattern_counts,
                              run_battery)

from . import oracles

bs = oracles.bit_string


def pcg_bits(seed, n=10**6):
    return np.random.Generator(np.random.PCG64(seed)).integers(0, 2, n, dtype=np.uint8)


class TestWorkedExamples:
    def test_monobit(self):
        r = randtests.monobit(bs(oracles.NIST_EPSILON_100))
        assert r.p_value == pytest.approx(oracles.NIST_MONOBIT_P, abs=1e-6) and r.passed

    def test_block_frequency(self):
        r = randtests.block_frequency(bs(oracles.NIST_EPSILON_100), m=10)
        assert r.p_value == pytest.approx(oracles.NIST_BLOCK_FREQ_M10_P, abs=1e-6)

    def test_runs(self):
        r = randtests.runs(bs(oracles.NIST_EPSILON_100))
        assert r.statistic == 52 and r.p_value == pytest.approx(oracles.NIST_RUNS_P, abs=1e-6)

    def test_cusum(self):
        fw = randtests.cusum(bs(oracles.NIST_EPSILON_100))
        bw = randtests.cusum(bs(oracles.NIST_EPSILON_100), reverse=True)
        assert fw.p_value == pytest.approx(oracles.NIST_CUSUM_FORWARD_P, abs=1e-6)
        assert bw.p_value == pytest.approx(oracles.NIST_CUSUM_BACKWARD_P, abs=1e-6)

    def test_serial(self):
        r1, r2 = randtests.serial(bs(oracles.NIST_SERIAL_EPS), m=3)
        assert (r1.p_value, r2.p_value) == pytest.approx(oracles.NIST_SERIAL_M3_P, abs=1e-6)

    def test_approximate_entropy(self):
        r = randtests.approximate_entropy(bs(oracles.NIST_APEN_EPS), m=3)
        assert r.p_value == pytest.approx(oracles.NIST_APEN_M3_P, abs=1e-6)

    def test_longest_run(self):
        r = randtests.longest_run(bs(oracles.NIST_LONGEST_RUN_128))
        assert r.statistic == pytest.approx(oracles.NIST_LONGEST_RUN_CHI2, abs=1e-6)
        assert r.p_value == pytest.approx(randtests.igamc(1.5, r.statistic / 2), rel=1e-12)


def test_all_zeros():
    r = randtests.monobit(np.zeros(100, np.uint8))
    assert r.statistic == 10.0
    assert r.p_value == pytest.approx(oracles.ERFC_10_OVER_SQRT2, rel=1e-9) and not r.passed


def test_alternating_pattern():
    bits = np.tile(np.array([0, 1], np.uint8), 500)
    assert randtests.monobit(bits).passed
    assert not randtests.runs(bits).passed


def test_runs_prerequisite():
    bits = np.array([1] * 75 + [0] * 25, np.uint8)
    r = randtests.runs(bits)
    assert r.p_value == 0.0 and not r.passed


def test_pattern_counts_match_oracle():
    bits = pcg_bits(3, 500)
    for m in (1, 2, 3, 5):
        counts = pattern_counts(bits, m)
        want = oracles.wrapped_pattern_counts(bits, m)
        for idx, c in enumerate(counts):
            assert c == want.get(format(idx, f"0{m}b"), 0)


def test_autocorrelation_detects_repeat():
    half = pcg_bits(4, 5000)
    assert not randtests.autocorrelation(np.concatenate([half, half]), 5000).passed
    assert randtests.autocorrelation(np.ones(1, np.uint8), 1).skipped


class TestBattery:
    def test_random_input_passes(self):
        res = run_battery(pcg_bits(42))
        assert [r.test_name for r in res] == list(TEST_NAMES)
        assert len(res) == 13
        assert all(0.0 <= r.p_value <= 1.0 for r in res)

    def test_short_input_is_skipped(self):
        res = run_battery(pcg_bits(1, 1000))
        assert all(r.skipped and math.isnan(r.p_value) and not r.passed for r in res)
        s = battery_summary(res)
        assert (s.pass_count, s.fail_count, s.skip_count) == (0, 0, 13) and not s.overall_pass

    def test_workers_agree(self):
        bits = pcg_bits(8)
        a = run_battery(bits)
        b = run_battery(bits, workers=4)
        assert [r.line() for r in a] == [r.line() for r in b]

    def test_bitblock_input(self):
        bits = pcg_bits(9)
        assert run_battery(BitBlock.from_bits(bits)) == run_battery(bits)

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            run_battery(pcg_bits(1), alpha=1.0)


class TestSummary:
    def test_counts(self):
        res = [TestResult("a", 0, 0.5, True, 10), TestResult("b", 0, 0.001, False, 10),
               TestResult("c", 0, 0.2, True, 10)]
        s = battery_summary(res)
        assert (s.pass_count, s.fail_count, s.skip_count, s.min_p) == (2, 1, 0, 0.001)
        assert not s.overall_pass

    def test_all_pass(self):
        s = battery_summary([TestResult("a", 0, 0.5, True, 10)])
        assert s.overall_pass

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            battery_summary([])

    def test_report(self, tmp_path):
        res = [TestResult("a", 1.5, 0.5, True, 10), TestResult("b", float("nan"), float("nan"), False, 10, True)]
        text = format_report(res)
        lines = text.splitlines()
        assert lines[0] == "name,statistic,p_value,pass"
        assert lines[1] == "a,1.5,0.5,pass" and lines[2] == "b,nan,nan,skip"
        assert "pass_count=1 fail_count=0 skip_count=1" in lines[3] and lines[3].endswith("overall=fail")
        randtests.write_report(tmp_path / "r.csv", res)
        assert (tmp_path / "r.csv").read_text() == text
