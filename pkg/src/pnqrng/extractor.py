"""Seeded Toeplitz strong extractor over GF(2).

The ``m x n`` matrix has entries ``T[r][c] = seed[r - c + n - 1]``.  It is
never materialised: output bit ``r`` is the coefficient of ``z**(r + n - 1)``
in the carry-less product of the seed polynomial with the input polynomial, so
a block is one truncated polynomial multiplication.

Bits are MSB-first inside every byte, on input, output and in seed files.
"""

from __future__ import annotations

import hashlib
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import FormatError, InvalidModelError, LengthMismatchError

WORKERS_ENV = "PNQRNG_WORKERS"
DEFAULT_N_IN = 4096
DEFAULT_M_OUT = 2048
_BLOCKS_PER_TASK = 256

_REV8 = np.array([int(f"{i:08b}"[::-1], 2) for i in range(256)], dtype=np.uint8)


def _bits(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.uint8).ravel()
    if a.size and a.max() > 1:
        raise InvalidModelError("bit arrays must hold only 0 and 1")
    return a


@dataclass(frozen=True)
class BitBlock:
    """Packed MSB-first bits; ``n_bits`` may stop short of the last byte."""

    data: bytes
    n_bits: int

    def __post_init__(self):
        if not 0 <= self.n_bits <= 8 * len(self.data):
            raise LengthMismatchError(f"{self.n_bits} bits do not fit in {len(self.data)} bytes")

    @classmethod
    def from_bits(cls, bits) -> "BitBlock":
        b = _bits(bits)
        return cls(np.packbits(b).tobytes(), b.size)

    def unpacked(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, np.uint8))[: self.n_bits]


@dataclass(frozen=True, eq=False)
class ToeplitzSeed:
    bits: np.ndarray  # n_in + m_out - 1 values in {0, 1}
    n_in: int
    m_out: int

    def __post_init__(self):
        if not 0 < self.m_out <= self.n_in:
            raise InvalidModelError(f"need 0 < m_out <= n_in, got m={self.m_out}, n={self.n_in}")
        bits = _bits(self.bits)
        if bits.size != self.n_in + self.m_out - 1:
            raise LengthMismatchError(
                f"seed holds {bits.size} bits; n + m - 1 = {self.n_in + self.m_out - 1}")
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        return (isinstance(other, ToeplitzSeed) and (self.n_in, self.m_out) == (other.n_in, other.m_out)
                and np.array_equal(self.bits, other.bits))

    @property
    def ratio(self) -> float:
        return self.m_out / self.n_in

    def digest(self) -> str:
        return hashlib.sha256(np.packbits(self.bits).tobytes()
                              + struct.pack("<II", self.n_in, self.m_out)).hexdigest()

    def entry(self, r: int, c: int) -> int:
        return int(self.bits[r - c + self.n_in - 1])


def new_seed(n_in: int, m_out: int, rng_seed: int | None = None,
             bit_file: str | Path | None = None) -> ToeplitzSeed:
    """Draw ``n_in + m_out - 1`` seed bits from a PRNG seed or an external bit file."""
    if not 0 < m_out <= n_in:
        raise InvalidModelError(f"need 0 < m_out <= n_in, got m={m_out}, n={n_in}")
    length = n_in + m_out - 1
    if bit_file is not None:
        bits = np.unpackbits(np.frombuffer(Path(bit_file).read_bytes(), dtype=np.uint8))
        if bits.size < length:
            raise LengthMismatchError(f"{bit_file}: {bits.size} bits available, {length} needed")
        return ToeplitzSeed(bits[:length].copy(), n_in, m_out)
    if rng_seed is None:
        raise InvalidModelError("give either rng_seed or bit_file")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    return ToeplitzSeed(rng.integers(0, 2, length, dtype=np.uint8), n_in, m_out)


class _Plan:
    """Seed packed for the compiled kernels, built once per seed."""

    def __init__(self, seed: ToeplitzSeed, backend: str | None = None):
        self.seed = seed
        n, m = seed.n_in, seed.m_out
        self.pad = (-n) % 64  # zero columns appended to the input
        self.n_pad = n + self.pad
        bits = np.concatenate((np.zeros(self.pad, np.uint8), seed.bits))
        self.seed_words = _pack_lsb_words(bits)
        self.mw = (m + 63) // 64
        if backend is None:
            backend = "clmul" if _kernels.HAVE_PCLMUL else "table"
        if backend not in ("clmul", "table"):
            raise InvalidModelError(f"unknown backend {backend!r}")
        self.backend = backend
        if backend == "table":
            self.table, self.row_words = _byte_table(bits)

    def run(self, x_words: np.ndarray) -> np.ndarray:
        """Kernel over whole blocks of LSB-first input words; returns output words."""
        nw = self.n_pad // 64
        nblocks = x_words.size // nw
        out = np.zeros(nblocks * self.mw, np.uint64)
        if self.backend == "clmul":
            _kernels.clmul_blocks(self.seed_words, x_words, nw, self.n_pad, self.seed.m_out, out)
        else:
            _kernels.table_blocks(self.table, self.row_words, x_words.view(np.uint8),
                                  self.n_pad, self.seed.m_out, out)
        return out.reshape(nblocks, self.mw)


def _pack_lsb_words(bits: np.ndarray) -> np.ndarray:
    padded = np.concatenate((bits, np.zeros((-bits.size) % 64, np.uint8)))
    return np.packbits(padded, bitorder="little").view("<u8").astype(np.uint64)


def _byte_table(seed_bits: np.ndarray):
    """Rows ``seed * v(z) * z**(8 sh)`` for every byte ``v`` and shift class ``sh``."""
    length = seed_bits.size + 8 + 56
    row_words = (length + 63) // 64
    single = np.zeros((8, row_words * 64), np.uint8)
    for k in range(8):
        single[k, k:k + seed_bits.size] = seed_bits
    combos = np.zeros((256, row_words * 64), np.uint8)
    for v in range(1, 256):
        low = v & -v
        combos[v] = combos[v ^ low] ^ single[low.bit_length() - 1]
    table = np.zeros((8, 256, row_words * 64), np.uint8)
    for sh in range(8):
        table[sh, :, 8 * sh:] = combos[:, :row_words * 64 - 8 * sh]
    words = np.packbits(table.reshape(-1, 64), axis=1, bitorder="little").view("<u8")
    return np.ascontiguousarray(words.astype(np.uint64).ravel()), row_words


def _msb_bytes_to_words(data: np.ndarray) -> np.ndarray:
    src = np.ascontiguousarray(data, dtype=np.uint8)
    dst = np.empty(src.size, np.uint8)
    _kernels.map_rows(src, max(src.size, 1), src.size, _REV8, dst)
    return dst.view("<u8").astype(np.uint64, copy=False)


def _words_to_bits(out_words: np.ndarray, m: int) -> np.ndarray:
    """Per-block output words to one packed MSB-first byte string of ``m`` bits per block."""
    src = np.ascontiguousarray(out_words, dtype="<u8").view(np.uint8).ravel()
    row = 8 * out_words.shape[1] if out_words.ndim == 2 else max(src.size, 1)
    keep = m // 8 if m % 8 == 0 else row
    dst = np.empty(src.size // row * keep, np.uint8)
    _kernels.map_rows(src, row, keep, _REV8, dst)
    if m % 8 == 0:
        return dst
    bits = np.unpackbits(dst.reshape(-1, row), axis=1)[:, :m]
    return np.packbits(bits.ravel())


def _blocks_to_words(plan: _Plan, data_bits: np.ndarray) -> np.ndarray:
    """Blocks of MSB-first 0/1 input, shape (k, n), to padded LSB-first words."""
    k = data_bits.shape[0]
    padded = np.zeros((k, plan.n_pad), np.uint8)
    padded[:, : plan.seed.n_in] = data_bits
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64).ravel()


def extract_block(seed: ToeplitzSeed, input_bits, backend: str | None = None) -> np.ndarray:
    """y = T x over GF(2) for one block; bits in, bits out (arrays of 0/1)."""
    x = _bits(input_bits)
    if x.size != seed.n_in:
        raise LengthMismatchError(f"input holds {x.size} bits, seed expects n_in={seed.n_in}")
    plan = _Plan(seed, backend)
    out = plan.run(_blocks_to_words(plan, x[None, :]))
    return np.unpackbits(_words_to_bits(out, seed.m_out))[: seed.m_out]


def extract_block_reference(seed: ToeplitzSeed, input_bits) -> np.ndarray:
    """Row-by-row AND + popcount parity on Python integers; slow, for cross-checks."""
    x = _bits(input_bits)
    if x.size != seed.n_in:
        raise LengthMismatchError(f"input holds {x.size} bits, seed expects n_in={seed.n_in}")
    n, m = seed.n_in, seed.m_out
    # row r reads seed[r .. r + n - 1] against the reversed input
    s_int = int.from_bytes(np.packbits(seed.bits[::-1]).tobytes(), "big") >> ((-seed.bits.size) % 8)
    x_rev = int("".join("1" if b else "0" for b in x), 2)  # bit j = x[n - 1 - j]
    mask = (1 << n) - 1
    return np.array([((s_int >> r) & mask & x_rev).bit_count() & 1 for r in range(m)], np.uint8)


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


@dataclass(frozen=True)
class ExtractionResult:
    data: bytes  # packed MSB-first output bits
    input_bits: int
    output_bits: int
    blocks: int
    discarded_bits: int

    @property
    def ratio(self) -> float:
        return self.output_bits / self.input_bits if self.input_bits else 0.0

    def bit_block(self) -> BitBlock:
        return BitBlock(self.data, self.output_bits)


class StreamExtractor:
    """Feed byte chunks, collect extracted bytes.

    Input is consumed in whole ``n_in``-bit blocks, all hashed with the same
    seed.  Bits left over at :meth:`finish` are discarded and counted.  Blocks
    fan out to ``workers`` threads (the compiled kernels release the GIL) and
    come back in input order.
    """

    def __init__(self, seed: ToeplitzSeed, workers: int | None = None, backend: str | None = None):
        self.seed = seed
        self.plan = _Plan(seed, backend)
        self.workers = worker_count(workers)
        self._carry = np.zeros(0, np.uint8)  # pending input bits, unpacked
        self._out_bits = np.zeros(0, np.uint8)  # output bits not yet byte aligned
        self.input_bits = 0
        self.output_bits = 0
        self.blocks = 0
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def _task(self, part: np.ndarray, from_bytes: bool) -> np.ndarray:
        """Whole blocks in, packed output bits out; conversion and packing stay on the worker."""
        words = _msb_bytes_to_words(part) if from_bytes else part
        return _words_to_bits(self.plan.run(words), self.seed.m_out)

    def _hash(self, src: np.ndarray, unit: int, nblocks: int, from_bytes: bool) -> np.ndarray:
        if self._pool is None or nblocks < 2 * _BLOCKS_PER_TASK:
            return self._task(src, from_bytes)
        per = max(_BLOCKS_PER_TASK, -(-nblocks // (4 * self.workers)))
        per += (-per) % 8  # every part but the last ends on a byte boundary
        parts = [src[i * unit:(i + per) * unit] for i in range(0, nblocks, per)]
        return np.concatenate(list(self._pool.map(self._task, parts, repeat(from_bytes))))

    def feed(self, data) -> bytes:
        """Hash every complete block available so far; returns finished output bytes."""
        chunk = np.frombuffer(bytes(data), np.uint8) if isinstance(data, (bytes, bytearray, memoryview)) \
            else np.ascontiguousarray(data, dtype=np.uint8)
        n, m = self.seed.n_in, self.seed.m_out
        self.input_bits += 8 * chunk.size
        if self._carry.size == 0 and self.plan.pad == 0 and n % 8 == 0:
            nblocks = chunk.size * 8 // n
            src, unit, from_bytes = chunk[: nblocks * n // 8], n // 8, True
            self._carry = np.unpackbits(chunk[nblocks * n // 8:])
        else:
            bits = np.concatenate((self._carry, np.unpackbits(chunk)))
            nblocks = bits.size // n
            src = _blocks_to_words(self.plan, bits[: nblocks * n].reshape(nblocks, n)) if nblocks else None
            unit, from_bytes = self.plan.n_pad // 64, False
            self._carry = bits[nblocks * n:]
        if nblocks == 0:
            return b""
        packed = self._hash(src, unit, nblocks, from_bytes)
        self.blocks += nblocks
        self.output_bits += nblocks * m
        if m % 8 == 0 and self._out_bits.size == 0:
            return packed.tobytes()
        bits = np.concatenate((self._out_bits, np.unpackbits(packed)[: nblocks * m]))
        full = bits.size - bits.size % 8
        self._out_bits = bits[full:]
        return np.packbits(bits[:full]).tobytes()

    def finish(self) -> tuple[bytes, int]:
        """Flush; returns (remaining output bytes zero-padded to a byte, discarded input bits)."""
        tail = np.packbits(self._out_bits).tobytes() if self._out_bits.size else b""
        discarded = int(self._carry.size)
        self._carry = np.zeros(0, np.uint8)
        self._out_bits = np.zeros(0, np.uint8)
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None
        return tail, discarded


def extract_stream(seed: ToeplitzSeed, chunks: Iterable, workers: int | None = None,
                   backend: str | None = None) -> ExtractionResult:
    """Hash a stream of byte chunks (``bytes``, uint8 arrays or ByteBlocks)."""
    ex = StreamExtractor(seed, workers, backend)
    parts = []
    for chunk in chunks:
        if hasattr(chunk, "packed_bits"):
            chunk = chunk.packed_bits()[0]
        parts.append(ex.feed(chunk))
    tail, discarded = ex.finish()
    parts.append(tail)
    return ExtractionResult(b"".join(parts), ex.input_bits, ex.output_bits, ex.blocks, discarded)


# .pqts seed file: 32-byte header then the packed seed bits
_PQTS = struct.Struct("<4sHHIIQ8x")
PQTS_MAGIC = b"PQTS"
PQTS_VERSION = 1


def write_seed(path: str | Path, seed: ToeplitzSeed) -> None:
    header = _PQTS.pack(PQTS_MAGIC, PQTS_VERSION, 0, seed.n_in, seed.m_out, seed.bits.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.packbits(seed.bits).tobytes())


def read_seed(path: str | Path) -> ToeplitzSeed:
    raw = Path(path).read_bytes()
    if len(raw) < _PQTS.size:
        raise FormatError(f"{path}: too short for a .pqts header")
    magic, version, _, n, m, count = _PQTS.unpack_from(raw)
    if magic != PQTS_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != PQTS_VERSION:
        raise FormatError(f"{path}: unsupported .pqts version {version}")
    bits = np.unpackbits(np.frombuffer(raw, np.uint8, offset=_PQTS.size))
    if bits.size < count:
        raise FormatError(f"{path}: header says {count} bits, file holds {bits.size}")
    return ToeplitzSeed(bits[:count].copy(), n, m)


def run_report(result: ExtractionResult, seed: ToeplitzSeed, epsilon: float | None = None) -> str:
    lines = [
        f"input_bits = {result.input_bits}",
        f"output_bits = {result.output_bits}",
        f"blocks = {result.blocks}",
        f"discarded_bits = {result.discarded_bits}",
        f"n_in = {seed.n_in}",
        f"m_out = {seed.m_out}",
        f"eta = {seed.ratio!r}",
        f"seed_sha256 = {seed.digest()}",
        f"output_sha256 = {hashlib.sha256(result.data).hexdigest()}",
    ]
    if epsilon is not None:
        lines.append(f"epsilon = {epsilon:.6e}")
    return "\n".join(lines) + "\n"
