"""Parsing of physical quantities written with unit suffixes.

Every configuration value that carries a dimension must be written with its
unit (``"5.23 GHz"``, ``"48 cm"``, ``"172.37 uW"``).  Bare numbers are rejected
for dimensioned kinds so that a missing ``n`` in ``ns`` cannot slip through.

Each kind converts to one canonical unit:

========== ============== ==========================================
kind       canonical unit accepted suffixes
========== ============== ==========================================
time       s              s, ms, us, µs, ns, ps, fs
frequency  Hz             Hz, kHz, MHz, GHz, THz
length     m              m, cm, mm, um, µm, nm, pm
power      mW             W, mW, uW, µW, nW
rate       S/s            S/s, kS/s, MS/s, GS/s (also Sps, MSps, ...)
voltage    mV             V, mV, uV, µV
variance   mV^2           V^2, mV^2, uV^2 (also written mV2, mV²)
phase      rad^2          rad^2 (also rad2, rad²)
phase_power rad^2 mW      rad^2 mW, rad^2 uW (also rad^2*mW, ...)
gain       mV/(mW rad)    mV/(mW rad), mV/mW/rad
========== ============== ==========================================
"""

from __future__ import annotations

import re

from .errors import ConfigError

_PREFIX = {
    "T": 1e12, "G": 1e9, "M": 1e6, "k": 1e3, "": 1.0,
    "m": 1e-3, "u": 1e-6, "µ": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15,
}

_TABLE: dict[str, dict[str, float]] = {
    "time": {p + "s": f for p, f in _PREFIX.items() if p in ("", "m", "u", "µ", "n", "p", "f")},
    "frequency": {p + "Hz": f for p, f in _PREFIX.items() if p in ("", "k", "M", "G", "T")},
    "length": {p + "m": f for p, f in _PREFIX.items() if p in ("", "m", "u", "µ", "n", "p")},
    "power": {p + "W": f * 1e3 for p, f in _PREFIX.items() if p in ("", "m", "u", "µ", "n")},
    "voltage": {p + "V": f * 1e3 for p, f in _PREFIX.items() if p in ("", "m", "u", "µ")},
}
_TABLE["length"]["cm"] = 1e-2
_TABLE["rate"] = {}
for _p in ("", "k", "M", "G"):
    for _suffix in ("S/s", "Sps", "Sa/s"):
        _TABLE["rate"][_p + _suffix] = _PREFIX[_p]
_TABLE["variance"] = {}
for _p, _f in (("", 1e3), ("m", 1.0), ("u", 1e-3), ("µ", 1e-3)):
    for _sq in ("^2", "2", "²"):
        _TABLE["variance"][_p + "V" + _sq] = _f * _f

_TABLE["phase"] = {"rad" + sq: 1.0 for sq in ("^2", "2", "²")}
_TABLE["phase_power"] = {}
for _sq in ("^2", "2", "²"):
    for _sep in (" ", "*", "·"):
        for _p, _f in (("m", 1.0), ("u", 1e-3), ("µ", 1e-3), ("", 1e3)):
            _TABLE["phase_power"][f"rad{_sq}{_sep}{_p}W"] = _f
_TABLE["gain"] = {"mV/(mW rad)": 1.0, "mV/(mW*rad)": 1.0, "mV/mW/rad": 1.0}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")

KINDS = tuple(_TABLE)


def parse_quantity(value: str | float | int, kind: str) -> float:
    """Convert ``value`` to the canonical unit of ``kind``.

    >>> parse_quantity("2.35 ns", "time")
    2.35e-09
    >>> parse_quantity("172.37 uW", "power")
    0.17237
    """
    if kind not in _TABLE:
        raise ConfigError(f"unknown quantity kind {kind!r}")
    if isinstance(value, bool) or not isinstance(value, str):
        raise ConfigError(
            f"{value!r} has no unit; write it with a {kind} unit, e.g. "
            f"'{value} {next(iter(_TABLE[kind]))}'"
        )
    m = _NUMBER.match(value)
    if m is None:
        raise ConfigError(f"cannot parse {value!r} as a {kind}")
    number, unit = float(m.group(1)), m.group(2)
    if not unit:
        raise ConfigError(f"{value!r} has no unit; expected a {kind} unit")
    scale = _TABLE[kind].get(unit)
    if scale is None:
        raise ConfigError(
            f"unit {unit!r} in {value!r} is not a {kind} unit "
            f"(accepted: {', '.join(sorted(_TABLE[kind]))})"
        )
    return number * scale


def format_quantity(value: float, kind: str) -> str:
    """Render a canonical value back with its canonical unit, lossless."""
    canonical = {"time": "s", "frequency": "Hz", "length": "m", "power": "mW",
                 "rate": "S/s", "voltage": "mV", "variance": "mV^2", "phase": "rad^2",
                 "phase_power": "rad^2 mW", "gain": "mV/(mW rad)"}[kind]
    return f"{value!r} {canonical}"
