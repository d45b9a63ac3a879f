"""A compact randomness test battery with exact p-values.

Frequency, block frequency, runs, longest run of ones, cumulative sums in both
directions, serial, approximate entropy and lagged autocorrelation.  The
formulas follow the standard statistical test suite definitions; the full
suites (and Diehard) are meant to run externally on exported files.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from ._special import erfc, igamc
from .errors import InsufficientDataError
from .extractor import BitBlock

DEFAULT_ALPHA = 0.01
DEFAULT_MIN_BITS = 10**6
BLOCK_FREQUENCY_M = 128
SERIAL_M = 16
APEN_M = 10
AUTOCORRELATION_LAGS = (1, 2, 8, 16)

# longest-run class probabilities: (block length, lowest class, pi)
_LONGEST_RUN = (
    (750_000, 10_000, 10, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, 4, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 1, (0.2148, 0.3672, 0.2305, 0.1875)),
)


@dataclass(frozen=True)
class TestResult:
    test_name: str
    statistic: float
    p_value: float  # nan when skipped
    passed: bool
    n_bits: int
    skipped: bool = False

    __test__ = False  # not a pytest class

    def line(self) -> str:
        verdict = "skip" if self.skipped else ("pass" if self.passed else "fail")
        return f"{self.test_name},{self.statistic!r},{self.p_value!r},{verdict}"


def _result(name, stat, p, alpha, n) -> TestResult:
    p = min(1.0, max(0.0, float(p)))
    return TestResult(name, float(stat), p, p >= alpha, n)


def _skipped(name, n) -> TestResult:
    return TestResult(name, float("nan"), float("nan"), False, n, True)


def as_bits(bits) -> np.ndarray:
    if isinstance(bits, BitBlock):
        return bits.unpacked()
    a = np.asarray(bits, dtype=np.uint8).ravel()
    if a.size and a.max() > 1:
        raise ValueError("bit arrays must hold only 0 and 1")
    return a


def _pm(bits: np.ndarray) -> np.ndarray:
    return 2 * bits.astype(np.int64) - 1


def monobit(bits, alpha=DEFAULT_ALPHA) -> TestResult:
    n = bits.size
    s_obs = abs(int(np.sum(_pm(bits)))) / math.sqrt(n)
    return _result("monobit", s_obs, erfc(s_obs / math.sqrt(2.0)), alpha, n)


def block_frequency(bits, alpha=DEFAULT_ALPHA, m=BLOCK_FREQUENCY_M) -> TestResult:
    n = bits.size
    nb = n // m
    if nb < 1:
        return _skipped("block_frequency", n)
    pi = bits[: nb * m].reshape(nb, m).sum(axis=1) / m
    chi2 = 4.0 * m * math.fsum((pi - 0.5) ** 2)
    return _result("block_frequency", chi2, igamc(nb / 2.0, chi2 / 2.0), alpha, n)


def runs(bits, alpha=DEFAULT_ALPHA) -> TestResult:
    n = bits.size
    pi = int(bits.sum()) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # frequency prerequisite failed: the runs statistic is meaningless
        return _result("runs", float("nan") if n == 0 else 0.0, 0.0, alpha, n)
    v_obs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    q = pi * (1.0 - pi)
    p = erfc(abs(v_obs - 2.0 * n * q) / (2.0 * math.sqrt(2.0 * n) * q))
    return _result("runs", v_obs, p, alpha, n)


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    nb, m = blocks.shape
    padded = np.zeros((nb, m + 2), np.uint8)
    padded[:, 1:-1] = blocks
    zeros = np.flatnonzero(padded.ravel() == 0)
    lengths = np.diff(zeros) - 1
    rows = zeros[:-1] // (m + 2)
    best = np.zeros(nb, np.int64)
    np.maximum.at(best, rows, lengths)
    return best


def longest_run(bits, alpha=DEFAULT_ALPHA) -> TestResult:
    n = bits.size
    for floor, m, lo, pi in _LONGEST_RUN:
        if n >= floor:
            break
    else:
        return _skipped("longest_run", n)
    nb = n // m
    k = len(pi) - 1
    longest = _longest_runs(bits[: nb * m].reshape(nb, m))
    counts = np.bincount(np.clip(longest, lo, lo + k) - lo, minlength=k + 1)
    expected = nb * np.asarray(pi)
    chi2 = math.fsum((counts - expected) ** 2 / expected)
    return _result("longest_run", chi2, igamc(k / 2.0, chi2 / 2.0), alpha, n)


def _phi(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def cusum_p_value(z: int, n: int) -> float:
    sq = math.sqrt(n)
    total = 1.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        total -= _phi((4 * k + 1) * z / sq) - _phi((4 * k - 1) * z / sq)
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        total += _phi((4 * k + 3) * z / sq) - _phi((4 * k + 1) * z / sq)
    return total


def cusum(bits, alpha=DEFAULT_ALPHA, reverse=False) -> TestResult:
    n = bits.size
    x = _pm(bits[::-1] if reverse else bits)
    z = int(np.max(np.abs(np.cumsum(x))))
    name = "cusum_backward" if reverse else "cusum_forward"
    return _result(name, z, cusum_p_value(z, n), alpha, n)


def pattern_counts(bits: np.ndarray, m: int) -> np.ndarray:
    """Overlapping m-bit pattern counts with the sequence wrapped around."""
    n = bits.size
    ext = np.concatenate((bits, bits[: m - 1])).astype(np.uint32)
    v = np.zeros(n, np.uint32)
    for j in range(m):
        v <<= np.uint32(1)
        v |= ext[j:j + n]
    return np.bincount(v, minlength=1 << m)


def _fold(counts: np.ndarray) -> np.ndarray:
    """Counts of (m-1)-bit patterns from cyclic m-bit counts: drop the last bit."""
    return counts.reshape(-1, 2).sum(axis=1)


def _psi2(counts: np.ndarray, n: int) -> float:
    if counts.size == 1:
        return 0.0
    return counts.size / n * math.fsum(counts.astype(np.float64) ** 2) - n


def serial(bits, alpha=DEFAULT_ALPHA, m=SERIAL_M) -> list[TestResult]:
    n = bits.size
    if n < m:
        return [_skipped("serial_1", n), _skipped("serial_2", n)]
    cm = pattern_counts(bits, m)
    cm1 = _fold(cm)
    cm2 = _fold(cm1)
    p0, p1, p2 = _psi2(cm, n), _psi2(cm1, n), _psi2(cm2, n)
    d1 = p0 - p1
    d2 = p0 - 2.0 * p1 + p2
    return [
        _result("serial_1", d1, igamc(2.0 ** (m - 2), d1 / 2.0), alpha, n),
        _result("serial_2", d2, igamc(2.0 ** (m - 3), d2 / 2.0), alpha, n),
    ]


def _phi_m(counts: np.ndarray, n: int) -> float:
    c = counts[counts > 0].astype(np.float64)
    return math.fsum(c / n * np.log(c / n))


def approximate_entropy(bits, alpha=DEFAULT_ALPHA, m=APEN_M) -> TestResult:
    n = bits.size
    if n < m + 1:
        return _skipped("approximate_entropy", n)
    c1 = pattern_counts(bits, m + 1)
    apen = _phi_m(_fold(c1), n) - _phi_m(c1, n)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return _result("approximate_entropy", chi2, igamc(2.0 ** (m - 1), chi2 / 2.0), alpha, n)


def autocorrelation(bits, lag: int, alpha=DEFAULT_ALPHA) -> TestResult:
    n = bits.size
    name = f"autocorrelation_{lag}"
    if n - lag < 1:
        return _skipped(name, n)
    a = int(np.count_nonzero(bits[:-lag] != bits[lag:]))
    x = 2.0 * (a - (n - lag) / 2.0) / math.sqrt(n - lag)
    return _result(name, x, erfc(abs(x) / math.sqrt(2.0)), alpha, n)


TEST_NAMES = (
    "monobit", "block_frequency", "runs", "longest_run", "cusum_forward", "cusum_backward",
    "serial_1", "serial_2", "approximate_entropy",
    *(f"autocorrelation_{d}" for d in AUTOCORRELATION_LAGS),
)


def run_battery(bits, alpha: float = DEFAULT_ALPHA, min_bits: int = DEFAULT_MIN_BITS,
                workers: int = 1) -> list[TestResult]:
    """Every test of the battery; inputs shorter than ``min_bits`` yield skip markers."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    b = as_bits(bits)
    n = b.size
    if n < max(min_bits, 2):
        return [_skipped(name, n) for name in TEST_NAMES]
    jobs = [
        partial(monobit, b, alpha),
        partial(block_frequency, b, alpha),
        partial(runs, b, alpha),
        partial(longest_run, b, alpha),
        partial(cusum, b, alpha),
        partial(cusum, b, alpha, True),
        partial(serial, b, alpha),
        partial(approximate_entropy, b, alpha),
        *(partial(autocorrelation, b, d, alpha) for d in AUTOCORRELATION_LAGS),
    ]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outs = list(pool.map(lambda f: f(), jobs))
    else:
        outs = [f() for f in jobs]
    results = []
    for o in outs:
        results.extend(o if isinstance(o, list) else [o])
    return results


@dataclass(frozen=True)
class BatterySummary:
    pass_count: int
    fail_count: int
    skip_count: int
    min_p: float

    @property
    def overall_pass(self) -> bool:
        return self.fail_count == 0 and self.skip_count == 0


def battery_summary(results: list[TestResult]) -> BatterySummary:
    if not results:
        raise InsufficientDataError("no test results to summarise")
    ran = [r for r in results if not r.skipped]
    return BatterySummary(
        sum(r.passed for r in ran),
        sum(not r.passed for r in ran),
        len(results) - len(ran),
        min((r.p_value for r in ran), default=float("nan")),
    )


def format_report(results: list[TestResult], alpha: float = DEFAULT_ALPHA) -> str:
    s = battery_summary(results)
    lines = ["name,statistic,p_value,pass"] + [r.line() for r in results]
    lines.append(
        f"# summary alpha={alpha} n_bits={results[0].n_bits} pass_count={s.pass_count} "
        f"fail_count={s.fail_count} skip_count={s.skip_count} min_p={s.min_p!r} "
        f"overall={'pass' if s.overall_pass else 'fail'}")
    return "\n".join(lines) + "\n"


def write_report(path: str | Path, results: list[TestResult], alpha: float = DEFAULT_ALPHA) -> None:
    Path(path).write_text(format_report(results, alpha))
