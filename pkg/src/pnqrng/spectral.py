"""Welch power-spectral-density estimates of simulated voltage records."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import welch

from .errors import InsufficientDataError, InvalidModelError
from .physics import SampleBlock

PSD_FLOOR_DB = -300.0
DEFAULT_SEGMENT = 4096


@dataclass(frozen=True)
class PsdEstimate:
    freqs_hz: np.ndarray
    psd_db: np.ndarray  # dB re 1 mV^2/Hz
    segment_len: int
    overlap: float

    @property
    def resolution_hz(self) -> float:
        return float(self.freqs_hz[1] - self.freqs_hz[0])


def to_db(psd: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(psd)
    return np.maximum(db, PSD_FLOOR_DB)


def estimate_psd(block: SampleBlock, segment_len: int = DEFAULT_SEGMENT,
                 overlap: float = 0.5) -> PsdEstimate:
    """One-sided Hann-windowed Welch average up to fs/2, mean removed per segment."""
    if segment_len < 2 or segment_len & (segment_len - 1):
        raise InvalidModelError(f"segment length must be a power of two, got {segment_len}")
    if not 0 <= overlap < 1:
        raise InvalidModelError("overlap must lie in [0, 1)")
    if len(block) < segment_len:
        raise InsufficientDataError(
            f"block of {len(block)} samples is shorter than one {segment_len}-sample segment")
    freqs, pxx = welch(block.samples, fs=block.sample_rate_sps, window="hann",
                       nperseg=segment_len, noverlap=int(segment_len * overlap),
                       detrend="constant", return_onesided=True, scaling="density")
    return PsdEstimate(freqs, to_db(pxx), segment_len, overlap)


def average_band_power(psd: PsdEstimate, f_lo: float, f_hi: float) -> float:
    """Mean of the dB spectrum over the bins with f_lo <= f <= f_hi."""
    if not f_lo < f_hi:
        raise InvalidModelError("band must satisfy f_lo < f_hi")
    sel = (psd.freqs_hz >= f_lo) & (psd.freqs_hz <= f_hi)
    if not sel.any():
        raise InsufficientDataError(f"no PSD bins in [{f_lo:g}, {f_hi:g}] Hz")
    return float(np.mean(psd.psd_db[sel]))


def write_psd_csv(path: str | Path, psd: PsdEstimate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "psd_db"])
        for f, p in zip(psd.freqs_hz, psd.psd_db):
            w.writerow([repr(float(f)), repr(float(p))])
