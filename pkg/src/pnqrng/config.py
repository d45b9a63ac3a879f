"""Pipeline configuration: a versioned YAML file with unit-suffixed quantities.

Layout (every dimensioned value needs its unit)::

    schema_version: 1
    seed: 1
    laser:     {linewidth, center_wavelength, spectral_width, power,
                quantum_strength, classical_strength, rin}
    chain:     {delay_length, group_index, pd_bandwidth, pd_background, gain}
    sampler:   {sample_rate, adc_bits, sim_oversample}
    timing:    {dominance_factor}
    analysis:  {power_count, power_min, power_max, samples_per_power, psd_segment}
    digitize:  {full_scale, normalize_block, raw_bits}
    entropy:   {safety_margin}
    extractor: {n_in, eta}
    tests:     {alpha, min_bits}

Per-stage seeds come from the global seed as the first eight bytes (big
endian) of ``sha256(f"{seed}:{stage}")``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError, PnqrngError
from .physics import LaserModel, OpticalChain, SamplerConfig
from .timing import TimingBudget
from .units import parse_quantity

SCHEMA_VERSION = 1
STAGES = ("simulate", "analysis", "psd", "extractor")


def derive_seed(global_seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{int(global_seed)}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class AnalysisGrid:
    power_count: int
    power_min_mw: float
    power_max_mw: float
    samples_per_power: int
    psd_segment: int


@dataclass(frozen=True)
class DigitizeSettings:
    full_scale_mv: float
    normalize_block: int
    raw_bits: int

    def n_samples(self, adc_bits: int) -> int:
        return -(-self.raw_bits // adc_bits)


@dataclass(frozen=True)
class ExtractorSettings:
    n_in: int
    eta: float

    @property
    def m_out(self) -> int:
        return int(round(self.eta * self.n_in))


@dataclass(frozen=True)
class PipelineConfig:
    schema_version: int
    seed: int
    laser: LaserModel
    chain: OpticalChain
    sampler: SamplerConfig
    dominance_factor: float
    analysis: AnalysisGrid
    digitize: DigitizeSettings
    safety_margin: float
    extractor: ExtractorSettings
    alpha: float
    min_bits: int
    raw: dict  # the parsed document, for hashing and echoing

    def stage_seed(self, stage: str) -> int:
        if stage not in STAGES:
            raise ConfigError(f"unknown stage {stage!r}")
        return derive_seed(self.seed, stage)

    def timing_budget(self) -> TimingBudget:
        return TimingBudget.from_models(self.laser, self.chain, self.sampler, self.dominance_factor)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name)
    if not isinstance(sec, dict):
        raise ConfigError(f"missing section {name!r}")
    return sec


def _get(sec: dict, section: str, key: str, kind: str | None = None, cast=float):
    if key not in sec:
        raise ConfigError(f"missing {section}.{key}")
    value = sec[key]
    try:
        if kind is not None:
            return parse_quantity(value, kind)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
        if cast is int and value != int(value):
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
        return cast(value)
    except ConfigError as e:
        raise ConfigError(f"{section}.{key}: {e}") from None


def from_dict(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    seed = doc.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an integer in [0, 2**64)")

    la, ch, sa = _section(doc, "laser"), _section(doc, "chain"), _section(doc, "sampler")
    ti, an, di = _section(doc, "timing"), _section(doc, "analysis"), _section(doc, "digitize")
    en, ex, te = _section(doc, "entropy"), _section(doc, "extractor"), _section(doc, "tests")
    try:
        laser = LaserModel(
            linewidth_hz=_get(la, "laser", "linewidth", "frequency"),
            center_wavelength_m=_get(la, "laser", "center_wavelength", "length"),
            spectral_width_m=_get(la, "laser", "spectral_width", "length"),
            power_mw=_get(la, "laser", "power", "power"),
            quantum_strength=_get(la, "laser", "quantum_strength", "phase_power"),
            classical_strength=_get(la, "laser", "classical_strength", "phase"),
            rin=_get(la, "laser", "rin"),
        )
        chain = OpticalChain(
            delay_length_m=_get(ch, "chain", "delay_length", "length"),
            group_index=_get(ch, "chain", "group_index"),
            pd_bandwidth_hz=_get(ch, "chain", "pd_bandwidth", "frequency"),
            pd_background_var=_get(ch, "chain", "pd_background", "variance"),
            gain=_get(ch, "chain", "gain", "gain"),
        )
        sampler = SamplerConfig(
            sample_rate_sps=_get(sa, "sampler", "sample_rate", "rate"),
            adc_bits=_get(sa, "sampler", "adc_bits", cast=int),
            sim_oversample=_get(sa, "sampler", "sim_oversample", cast=int),
        )
        dominance = _get(ti, "timing", "dominance_factor")
        TimingBudget(1.0, 1.0, 1.0, 1.0, dominance)
    except ConfigError:
        raise
    except PnqrngError as e:
        raise ConfigError(str(e)) from None

    analysis = AnalysisGrid(
        power_count=_get(an, "analysis", "power_count", cast=int),
        power_min_mw=_get(an, "analysis", "power_min", "power"),
        power_max_mw=_get(an, "analysis", "power_max", "power"),
        samples_per_power=_get(an, "analysis", "samples_per_power", cast=int),
        psd_segment=_get(an, "analysis", "psd_segment", cast=int),
    )
    if analysis.power_count < 3 or not 0 < analysis.power_min_mw < analysis.power_max_mw:
        raise ConfigError("analysis grid needs >= 3 powers with 0 < power_min < power_max")
    digitize = DigitizeSettings(
        full_scale_mv=_get(di, "digitize", "full_scale", "voltage"),
        normalize_block=_get(di, "digitize", "normalize_block", cast=int),
        raw_bits=_get(di, "digitize", "raw_bits", cast=int),
    )
    if digitize.full_scale_mv <= 0 or digitize.normalize_block < 2 or digitize.raw_bits <= 0:
        raise ConfigError("digitize settings must be positive (normalize_block >= 2)")
    margin = _get(en, "entropy", "safety_margin")
    if not 0 <= margin < 1:
        raise ConfigError("entropy.safety_margin must lie in [0, 1)")
    extractor = ExtractorSettings(
        n_in=_get(ex, "extractor", "n_in", cast=int),
        eta=_get(ex, "extractor", "eta"),
    )
    n = extractor.n_in
    if n < 64 or n > 65536 or n & (n - 1):
        raise ConfigError(f"extractor.n_in must be a power of two in [64, 65536], got {n}")
    if not 0 < extractor.eta <= 1 or not math.isclose(extractor.m_out, extractor.eta * n):
        raise ConfigError(f"extractor.eta must lie in (0, 1] with eta * n_in an integer")
    alpha = _get(te, "tests", "alpha")
    if not 0 < alpha < 1:
        raise ConfigError("tests.alpha must lie in (0, 1)")
    min_bits = _get(te, "tests", "min_bits", cast=int)

    return PipelineConfig(SCHEMA_VERSION, seed, laser, chain, sampler, dominance, analysis,
                          digitize, margin, extractor, alpha, min_bits, copy.deepcopy(doc))


def default_document() -> dict:
    text = resources.files("pnqrng").joinpath("data/calibrated.yaml").read_text()
    return yaml.safe_load(text)


def load_document(path: str | Path | None) -> dict:
    if path is None:
        return default_document()
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    return doc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """``section.key=value`` assignments; values are parsed as YAML scalars."""
    doc = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node: Any = doc
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"override {key!r}: no section {p!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"override {key!r}: unknown field")
        node[parts[-1]] = yaml.safe_load(value)
    return doc


def load_config(path: str | Path | None = None, overrides: list[str] | None = None,
                seed: int | None = None) -> PipelineConfig:
    doc = apply_overrides(load_document(path), overrides or [])
    if seed is not None:
        doc["seed"] = seed
    return from_dict(doc)
