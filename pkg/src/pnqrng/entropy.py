"""Most-common-value min-entropy estimate and extraction-ratio budgeting.

Symbols are treated as i.i.d. draws from a trusted source; the estimate is the
upper 99 % confidence bound on the probability of the most frequent symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .digitize import ByteBlock
from .errors import InsufficientDataError, InvalidModelError, NoExtractableEntropyError

Z_99 = 2.576
MIN_COUNT_PER_SYMBOL = 100
RATIO_GRANULE = 64  # extraction ratios are multiples of 1/64


@dataclass(frozen=True)
class EntropyReport:
    min_entropy_bits_per_symbol: float
    symbol_bits: int
    p_max: float  # observed frequency of the commonest symbol
    p_upper: float  # 99 % upper bound used for the estimate
    n_symbols: int

    @property
    def ratio_bound(self) -> float:
        return self.min_entropy_bits_per_symbol / self.symbol_bits

    def as_text(self) -> str:
        return (
            f"min_entropy_bits_per_symbol = {self.min_entropy_bits_per_symbol:.6f}\n"
            f"symbol_bits = {self.symbol_bits}\n"
            f"p_max = {self.p_max:.8f}\n"
            f"p_upper = {self.p_upper:.8f}\n"
            f"n_symbols = {self.n_symbols}\n"
            f"ratio_bound = {self.ratio_bound:.6f}\n"
        )


def mcv_estimate(max_count: int, n: int) -> tuple[float, float]:
    """(p_max, upper-bound p) for ``max_count`` hits of the commonest symbol in ``n``."""
    p = max_count / n
    return p, min(1.0, p + Z_99 * math.sqrt(p * (1.0 - p) / n))


def min_entropy(block: ByteBlock, min_per_symbol: int = MIN_COUNT_PER_SYMBOL) -> EntropyReport:
    n = len(block)
    need = (1 << block.adc_bits) * min_per_symbol
    if n < need:
        raise InsufficientDataError(
            f"{n} symbols is too few for a {block.adc_bits}-bit alphabet; need >= {need}")
    counts = np.bincount(block.symbols, minlength=1 << block.adc_bits)
    p, pu = mcv_estimate(int(counts.max()), n)
    h = -math.log2(pu)
    return EntropyReport(max(0.0, h), block.adc_bits, p, pu, n)


def recommend_ratio(report: EntropyReport, safety_margin: float = 0.03) -> float:
    """Largest multiple of 1/64 not above (1 - margin) * H / bits."""
    if not 0 <= safety_margin < 1:
        raise InvalidModelError("safety margin must lie in [0, 1)")
    if report.min_entropy_bits_per_symbol <= 0:
        raise NoExtractableEntropyError("min-entropy is zero; nothing to extract")
    bound = (1.0 - safety_margin) * report.ratio_bound
    eta = math.floor(bound * RATIO_GRANULE + 1e-12) / RATIO_GRANULE
    if eta > bound:
        eta -= 1.0 / RATIO_GRANULE
    if eta <= 0:
        raise NoExtractableEntropyError(
            f"entropy bound {bound:.4f} is below the smallest ratio 1/{RATIO_GRANULE}")
    return eta


def confirm_ratio(report: EntropyReport, eta: float) -> None:
    """Refuse an extraction ratio above the measured min-entropy fraction."""
    if eta > report.ratio_bound:
        raise NoExtractableEntropyError(
            f"extraction ratio {eta} exceeds the min-entropy bound "
            f"{report.min_entropy_bits_per_symbol:.4f}/{report.symbol_bits} = "
            f"{report.ratio_bound:.4f}")


def leftover_hash_epsilon(n_in: int, m_out: int, report: EntropyReport) -> float:
    """Statistical distance bound 2**(-(k - m)/2) with k = n * H / bits (capped at 1)."""
    k = n_in * report.ratio_bound
    return min(1.0, 2.0 ** (-(k - m_out) / 2.0))
