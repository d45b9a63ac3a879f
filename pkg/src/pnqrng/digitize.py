"""ADC model, min/max normalisation to unsigned symbols and the generation-rate budget."""

from __future__ import annotations

import csv
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateRangeError, FormatError, InvalidModelError, RateError
from .physics import SampleBlock, SamplerConfig

DEFAULT_NORMALIZE_BLOCK = 1 << 20


@dataclass
class ByteBlock:
    symbols: np.ndarray
    adc_bits: int
    source_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.adc_bits <= 16:
            raise InvalidModelError("adc_bits must be in [1, 16]")
        dtype = np.uint8 if self.adc_bits <= 8 else np.uint16
        sym = np.asarray(self.symbols)
        if sym.size and (sym.min() < 0 or int(sym.max()) >= 1 << self.adc_bits):
            raise InvalidModelError(f"symbol out of range for {self.adc_bits}-bit block")
        self.symbols = np.ascontiguousarray(sym, dtype=dtype)

    def __len__(self) -> int:
        return self.symbols.size

    def packed_bits(self) -> tuple[np.ndarray, int]:
        """Symbols as an MSB-first bit string, packed into bytes; returns (bytes, n_bits)."""
        if self.adc_bits == 8:
            return self.symbols, 8 * len(self)
        wide = self.symbols.astype(">u2").view(np.uint8).reshape(-1, 2)
        bits = np.unpackbits(wide, axis=1)[:, 16 - self.adc_bits:]
        n_bits = bits.size
        return np.packbits(bits.ravel()), n_bits


@dataclass(frozen=True)
class RateBudget:
    raw_bps: float
    extraction_ratio: float
    post_bps: float


def adc_quantize(block: SampleBlock, full_scale_mv: float, bits: int = 8) -> SampleBlock:
    """Mid-tread ADC spanning [-full_scale/2, full_scale/2): round to the nearest level, clip."""
    if not full_scale_mv > 0:
        raise InvalidModelError("ADC full scale must be positive")
    lsb = full_scale_mv / (1 << bits)
    half = 1 << (bits - 1)
    codes = np.clip(np.floor(block.samples / lsb + 0.5), -half, half - 1)
    meta = dict(block.origin, adc_full_scale_mv=full_scale_mv, adc_lsb_mv=lsb,
                adc_clipped=int(np.count_nonzero((codes == -half) | (codes == half - 1))))
    return SampleBlock(codes * lsb, block.sample_period_s, meta)


def _map(x: np.ndarray, lo: float, hi: float, top: int) -> np.ndarray:
    scaled = (x - lo) / (hi - lo) * top
    return np.clip(np.floor(scaled + 0.5), 0, top)


def normalize(block: SampleBlock, adc_bits: int = 8) -> ByteBlock:
    """Affine min/max map of the block onto [0, 2**adc_bits - 1], nearest with ties up."""
    if not 1 <= adc_bits <= 16:
        raise InvalidModelError("adc_bits must be in [1, 16]")
    if len(block) < 2:
        raise DegenerateRangeError("normalisation needs at least two samples")
    x = block.samples
    lo, hi = float(x.min()), float(x.max())
    if not hi > lo:
        raise DegenerateRangeError(f"constant block (all samples {lo}); range is zero")
    sym = _map(x, lo, hi, (1 << adc_bits) - 1)
    meta = dict(block.origin, block_extrema=[[lo, hi]], normalize_block=len(block))
    return ByteBlock(sym, adc_bits, meta)


def normalize_stream(block: SampleBlock, adc_bits: int = 8,
                     block_size: int = DEFAULT_NORMALIZE_BLOCK) -> ByteBlock:
    """Normalise per ``block_size`` run of samples, as a streaming digitiser would.

    The extrema of every run are recorded in ``source_meta["block_extrema"]``.
    A trailing run shorter than two samples is folded into the previous run.
    """
    if block_size < 2:
        raise InvalidModelError("normalisation block size must be >= 2")
    x = block.samples
    bounds = list(range(0, len(x), block_size)) + [len(x)]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] < 2:
        bounds.pop(-2)
    parts, extrema = [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        nb = normalize(SampleBlock(x[a:b], block.sample_period_s), adc_bits)
        parts.append(nb.symbols)
        extrema.extend(nb.source_meta["block_extrema"])
    meta = dict(block.origin, block_extrema=extrema, normalize_block=block_size)
    return ByteBlock(np.concatenate(parts), adc_bits, meta)


def raw_rate(sampler: SamplerConfig) -> float:
    """Raw generation rate in bit/s: sample rate times ADC resolution."""
    return sampler.sample_rate_sps * sampler.adc_bits


def post_rate(raw_bps: float, extraction_ratio: float) -> float:
    if not 0 < extraction_ratio <= 1:
        raise RateError(f"extraction ratio must lie in (0, 1], got {extraction_ratio}")
    return extraction_ratio * raw_bps


def rate_budget(sampler: SamplerConfig, extraction_ratio: float) -> RateBudget:
    raw = raw_rate(sampler)
    return RateBudget(raw, extraction_ratio, post_rate(raw, extraction_ratio))


def histogram(block: ByteBlock) -> np.ndarray:
    return np.bincount(block.symbols, minlength=1 << block.adc_bits)


def empty_bin_fraction(counts: np.ndarray) -> float:
    """Fraction of empty bins between the lowest and highest occupied symbol."""
    occupied = np.flatnonzero(counts)
    if occupied.size == 0:
        return 0.0
    span = counts[occupied[0]:occupied[-1] + 1]
    return float(np.count_nonzero(span == 0)) / span.size


def write_histogram_csv(path: str | Path, counts: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["symbol", "count"])
        for s, c in enumerate(counts):
            w.writerow([s, int(c)])


# .pqnb: 64-byte header then symbols (uint8, or little-endian uint16 above 8 bits)
_PQNB = struct.Struct("<4sHHQ32s16x")
PQNB_MAGIC = b"PQNB"
PQNB_VERSION = 1


def source_hash(block: ByteBlock) -> bytes:
    h = block.source_meta.get("source_hash")
    if h:
        return bytes.fromhex(h)
    return hashlib.sha256(block.symbols.tobytes()).digest()


def write_bytes(path: str | Path, block: ByteBlock) -> None:
    body = block.symbols if block.adc_bits <= 8 else block.symbols.astype("<u2")
    header = _PQNB.pack(PQNB_MAGIC, PQNB_VERSION, block.adc_bits, len(block), source_hash(block))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def read_bytes(path: str | Path) -> ByteBlock:
    raw = Path(path).read_bytes()
    if len(raw) < _PQNB.size:
        raise FormatError(f"{path}: too short for a .pqnb header")
    magic, version, bits, count, digest = _PQNB.unpack_from(raw)
    if magic != PQNB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != PQNB_VERSION:
        raise FormatError(f"{path}: unsupported .pqnb version {version}")
    dtype = np.uint8 if bits <= 8 else np.dtype("<u2")
    body = np.frombuffer(raw, dtype=dtype, offset=_PQNB.size)
    if body.size != count:
        raise FormatError(f"{path}: header says {count} symbols, file holds {body.size}")
    return ByteBlock(body.copy(), bits, {"source_hash": digest.hex()})
