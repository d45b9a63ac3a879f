"""Subsystem timescales and the sampling-rate matching conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidModelError
from .physics import (LaserModel, OpticalChain, SamplerConfig, coherence_time, delay_time,
                      response_time)

DEFAULT_DOMINANCE = 10.0


@dataclass(frozen=True)
class TimingBudget:
    tc_s: float  # laser coherence time
    td_s: float  # interferometer delay
    tr_s: float  # photodiode response
    ts_s: float  # sampling period
    dominance_factor: float = DEFAULT_DOMINANCE  # reading of "Td >> Tc" as Td > k Tc

    def __post_init__(self):
        if min(self.tc_s, self.td_s, self.tr_s, self.ts_s) <= 0:
            raise InvalidModelError("all four timescales must be positive")
        if self.dominance_factor < 1:
            raise InvalidModelError("dominance factor must be >= 1")

    @classmethod
    def from_models(cls, laser: LaserModel, chain: OpticalChain, sampler: SamplerConfig,
                    dominance_factor: float = DEFAULT_DOMINANCE) -> TimingBudget:
        return cls(coherence_time(laser), delay_time(chain), response_time(chain),
                   sampler.sample_period_s, dominance_factor)


class BudgetCheck(NamedTuple):
    phase_decorrelated: bool  # Td >> Tc
    sample_decorrelated: bool  # Ts - Td > Tr

    @property
    def ok(self) -> bool:
        return self.phase_decorrelated and self.sample_decorrelated


def _exceeds(a: float, b: float) -> bool:
    """Strictly greater, with values equal up to rounding treated as equal."""
    return a > b and not math.isclose(a, b, rel_tol=1e-12)


def check_budget(b: TimingBudget) -> BudgetCheck:
    return BudgetCheck(
        phase_decorrelated=_exceeds(b.td_s, b.dominance_factor * b.tc_s),
        sample_decorrelated=b.ts_s - b.td_s > b.tr_s,
    )


def max_sample_rate(b: TimingBudget) -> float:
    """Supremum of admissible sampling rates, 1 / (Td + Tr); use a strictly smaller rate."""
    return 1.0 / (b.td_s + b.tr_s)


def format_budget(b: TimingBudget, check: BudgetCheck | None = None) -> str:
    """Table row in ns: Tc, Td, Tr, Ts and both predicates."""
    check = check or check_budget(b)
    head = f"{'Tc (ns)':>8} {'Td (ns)':>8} {'Tr (ns)':>8} {'Ts (ns)':>8}  {'Td>>Tc':>7} {'Ts-Td>Tr':>9}"
    row = (f"{b.tc_s * 1e9:8.2f} {b.td_s * 1e9:8.2f} {b.tr_s * 1e9:8.2f} {b.ts_s * 1e9:8.2f}  "
           f"{str(check.phase_decorrelated):>7} {str(check.sample_decorrelated):>9}")
    return head + "\n" + row
