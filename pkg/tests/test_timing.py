import pytest
from hypothesis import given
from hypothesis import strategies as st

from pnqrng.errors import InvalidModelError
from pnqrng.physics import calibrated_models
from pnqrng.timing import TimingBudget, check_budget, format_budget, max_sample_rate

NS = 1e-9


def budget(tc, td, tr, ts, k=10.0):
    return TimingBudget(tc * NS, td * NS, tr * NS, ts * NS, k)


@pytest.mark.parametrize("times,expected", [
    ((0.19, 2.35, 0.07, 4.00), (True, True)),
    ((0.19, 2.35, 0.07, 2.40), (True, False)),
    ((1.0, 1.0, 0.07, 4.00), (False, True)),
    ((0.235, 2.35, 0.07, 4.00), (False, True)),
])
def test_check_budget(times, expected):
    assert tuple(check_budget(budget(*times))) == expected


def test_dominance_factor_is_configurable():
    assert check_budget(budget(1.0, 1.0, 0.07, 4.0, k=1.0)).phase_decorrelated is False
    assert check_budget(budget(0.19, 2.35, 0.07, 4.0, k=20.0)).phase_decorrelated is False
    assert check_budget(budget(0.19, 2.35, 0.07, 4.0, k=12.0)).phase_decorrelated is True


def test_invariants():
    with pytest.raises(InvalidModelError):
        budget(0.0, 2.35, 0.07, 4.0)
    with pytest.raises(InvalidModelError):
        budget(0.19, 2.35, 0.07, 4.0, k=0.5)


@pytest.mark.parametrize("td,tr,rate", [(2.35, 0.07, 413.2e6), (3.93, 0.07, 250e6), (1e-9, 0.07, 14.29e9)])
def test_max_sample_rate(td, tr, rate):
    assert max_sample_rate(budget(0.19, td, tr, 4.0)) == pytest.approx(rate, rel=1e-3)


def test_from_calibrated_models():
    laser, chain, sampler = calibrated_models()
    b = TimingBudget.from_models(laser, chain, sampler)
    assert (b.tc_s, b.td_s, b.tr_s, b.ts_s) == pytest.approx((0.1912e-9, 2.3504e-9, 0.07e-9, 4e-9), rel=1e-3)
    assert check_budget(b).ok


def test_format_budget_row():
    text = format_budget(budget(0.19, 2.35, 0.07, 4.00))
    row = text.splitlines()[1].split()
    assert row == ["0.19", "2.35", "0.07", "4.00", "True", "True"]


times = st.floats(0.01, 10.0)


@given(times, times, times, times, st.floats(0.0, 10.0))
def test_larger_period_never_breaks_sample_decorrelation(tc, td, tr, ts, extra):
    before = check_budget(budget(tc, td, tr, ts)).sample_decorrelated
    after = check_budget(budget(tc, td, tr, ts + extra)).sample_decorrelated
    assert after or not before


@given(times, times, st.floats(0.01, 0.999))
def test_rates_below_maximum_are_admissible(td, tr, frac):
    b = budget(1.0, td, tr, 1.0)
    rate = frac * max_sample_rate(b)
    assert check_budget(budget(1.0, td, tr, 1.0 / rate / NS)).sample_decorrelated
