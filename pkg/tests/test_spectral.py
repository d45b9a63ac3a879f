import numpy as np
import pytest

from pnqrng.errors import InsufficientDataError, InvalidModelError
from pnqrng.physics import SampleBlock, SamplerConfig, calibrated_models, simulate_intensity_noise, simulate_voltage
from pnqrng.spectral import PSD_FLOOR_DB, PsdEstimate, average_band_power, estimate_psd, write_psd_csv

FS = 250e6


def _white(n=1 << 20, seed=0):
    return SampleBlock(np.random.default_rng(seed).standard_normal(n), 1 / FS)


def test_white_noise_is_flat_at_expected_level():
    est = estimate_psd(_white())
    expect = 10 * np.log10(1 / (FS / 2))
    assert average_band_power(est, 1e6, 120e6) == pytest.approx(expect, abs=0.5)
    assert np.all(np.diff(est.freqs_hz) > 0)
    assert est.freqs_hz[-1] == pytest.approx(FS / 2)
    assert len(est.freqs_hz) == len(est.psd_db) == 4096 // 2 + 1


def test_parseval_on_white_noise():
    blk = _white(seed=3)
    est = estimate_psd(blk)
    lin = 10 ** (est.psd_db / 10)
    assert np.sum(lin) * est.resolution_hz == pytest.approx(np.var(blk.samples), rel=0.01)


def test_single_tone_peak():
    t = np.arange(1 << 18) / FS
    est = estimate_psd(SampleBlock(np.sin(2 * np.pi * 10e6 * t), 1 / FS))
    k = int(np.argmax(est.psd_db))
    assert est.freqs_hz[k] == pytest.approx(10e6, abs=est.resolution_hz)
    assert est.psd_db[k] - np.median(est.psd_db) >= 30


def test_silence_hits_floor():
    est = estimate_psd(SampleBlock(np.zeros(8192), 1 / FS))
    assert np.all(est.psd_db == PSD_FLOOR_DB)


def test_band_power():
    f = np.linspace(0, 100, 101)
    flat = PsdEstimate(f, np.full(101, -100.0), 200, 0.5)
    assert average_band_power(flat, 3, 70) == -100.0
    ramp = PsdEstimate(f, -f, 200, 0.5)
    assert average_band_power(ramp, 41.5, 42.5) == -42.0
    with pytest.raises(InsufficientDataError):
        average_band_power(ramp, 41.2, 41.8)
    with pytest.raises(InvalidModelError):
        average_band_power(ramp, 50, 10)


def test_argument_checks():
    with pytest.raises(InvalidModelError):
        estimate_psd(_white(8192), segment_len=1000)
    with pytest.raises(InvalidModelError):
        estimate_psd(_white(8192), overlap=1.0)
    with pytest.raises(InsufficientDataError):
        estimate_psd(_white(1000))


def test_total_noise_above_intensity_noise():
    laser, chain, sampler = calibrated_models()
    tfn = estimate_psd(simulate_voltage(laser, chain, sampler, 1 << 20, 1))
    intensity = estimate_psd(simulate_intensity_noise(laser, chain, sampler, 1 << 20, 1))
    gap = average_band_power(tfn, 1e6, 100e6) - average_band_power(intensity, 1e6, 100e6)
    assert gap > 3.0


@pytest.mark.xfail(strict=True, reason="detector background is common to both curves; "
                                       "the calibrated gap is about 5.6 dB")
def test_total_noise_exceeds_intensity_noise_by_6_db():
    laser, chain, sampler = calibrated_models()
    tfn = estimate_psd(simulate_voltage(laser, chain, sampler, 1 << 20, 1))
    intensity = estimate_psd(simulate_intensity_noise(laser, chain, sampler, 1 << 20, 1))
    gap = average_band_power(tfn, 1e6, 100e6) - average_band_power(intensity, 1e6, 100e6)
    assert gap > 6.0


def test_rolloff_beyond_photodiode_pole():
    laser, chain, _ = calibrated_models()
    fast = SamplerConfig(40e9, 8, 4)
    est = estimate_psd(simulate_voltage(laser, chain, fast, 1 << 21, 5), segment_len=1 << 14)
    plateau = average_band_power(est, 10e6, 100e6)
    f2 = 2 * chain.pd_bandwidth_hz
    near_2f = average_band_power(est, 0.9 * f2, 1.1 * f2)
    assert near_2f <= plateau - 10


def test_csv(tmp_path):
    est = estimate_psd(_white(8192))
    write_psd_csv(tmp_path / "psd.csv", est)
    lines = (tmp_path / "psd.csv").read_text().splitlines()
    assert lines[0] == "freq_hz,psd_db"
    assert len(lines) == 1 + len(est.freqs_hz)
    f, p = map(float, lines[5].split(","))
    assert (f, p) == (est.freqs_hz[4], est.psd_db[4])
