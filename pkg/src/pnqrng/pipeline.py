"""End-to-end run: simulate, digitise, estimate entropy, extract, test, and write a manifest.

Every artifact lands in one output directory and its sha256 is listed in
``manifest.json``.  Nothing time-dependent is recorded, so two runs with the
same configuration and seed produce byte-identical directories.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import digitize, entropy, extractor, physics, randtests
from .config import PipelineConfig
from .errors import PnqrngError
from .timing import check_budget, format_budget

MANIFEST = "manifest.json"
FILES = {
    "timing": "timing.txt",
    "samples": "samples.pqns",
    "symbols": "symbols.pqnb",
    "histogram": "histogram.csv",
    "entropy": "entropy.txt",
    "seed": "seed.pqts",
    "raw_bits": "raw.bin",
    "extracted": "extracted.bin",
    "extract_report": "extracted.report.txt",
    "raw_tests": "raw_tests.csv",
    "extracted_tests": "extracted_tests.csv",
}


class StageError(PnqrngError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    out_dir: Path
    manifest: dict

    @property
    def passed(self) -> bool:
        return self.manifest["tests"]["extracted"]["overall_pass"]


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _tests_entry(results) -> dict:
    s = randtests.battery_summary(results)
    return {
        "pass_count": s.pass_count,
        "fail_count": s.fail_count,
        "skip_count": s.skip_count,
        "min_p": None if s.skip_count == len(results) else s.min_p,
        "overall_pass": s.overall_pass,
        "results": [
            {"name": r.test_name, "statistic": None if r.skipped else r.statistic,
             "p_value": None if r.skipped else r.p_value, "pass": r.passed, "skipped": r.skipped}
            for r in results
        ],
    }


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if ev is not None and not isinstance(ev, StageError) and isinstance(ev, Exception):
            raise StageError(self.name, ev) from ev
        return False


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path, force: bool = False,
                 workers: int | None = None) -> PipelineResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = {k: out / v for k, v in FILES.items()}
    seeds = {s: cfg.stage_seed(s) for s in ("simulate", "extractor")}

    with _Stage("timing"):
        budget = cfg.timing_budget()
        check = check_budget(budget)
        path["timing"].write_text(format_budget(budget, check) + "\n")
        if not check.ok and not force:
            raise ValueError("timing budget violated:\n" + format_budget(budget, check))

    with _Stage("simulate"):
        n_samples = cfg.digitize.n_samples(cfg.sampler.adc_bits)
        volts = physics.simulate_voltage(cfg.laser, cfg.chain, cfg.sampler, n_samples,
                                         seeds["simulate"])
        physics.write_samples(path["samples"], volts)

    with _Stage("digitize"):
        coded = digitize.adc_quantize(volts, cfg.digitize.full_scale_mv, cfg.sampler.adc_bits)
        symbols = digitize.normalize_stream(coded, cfg.sampler.adc_bits, cfg.digitize.normalize_block)
        symbols.source_meta["source_hash"] = _sha256(path["samples"])
        digitize.write_bytes(path["symbols"], symbols)
        counts = digitize.histogram(symbols)
        digitize.write_histogram_csv(path["histogram"], counts)
        raw_packed, raw_nbits = symbols.packed_bits()
        path["raw_bits"].write_bytes(raw_packed.tobytes())
        budget_rates = digitize.rate_budget(cfg.sampler, cfg.extractor.eta)
        del volts, coded

    with _Stage("entropy"):
        report = entropy.min_entropy(symbols)
        recommended = entropy.recommend_ratio(report, cfg.safety_margin)
        entropy.confirm_ratio(report, cfg.extractor.eta)
        eps = entropy.leftover_hash_epsilon(cfg.extractor.n_in, cfg.extractor.m_out, report)
        path["entropy"].write_text(report.as_text() + f"recommended_eta = {recommended!r}\n"
                                   f"configured_eta = {cfg.extractor.eta!r}\n")

    with _Stage("extract"):
        seed = extractor.new_seed(cfg.extractor.n_in, cfg.extractor.m_out,
                                  rng_seed=seeds["extractor"])
        extractor.write_seed(path["seed"], seed)
        result = extractor.extract_stream(seed, [raw_packed], workers=workers)
        path["extracted"].write_bytes(result.data)
        path["extract_report"].write_text(extractor.run_report(result, seed, eps))

    with _Stage("test"):
        raw_results = randtests.run_battery(np.unpackbits(raw_packed)[:raw_nbits], cfg.alpha,
                                            cfg.min_bits)
        ext_results = randtests.run_battery(result.bit_block(), cfg.alpha, cfg.min_bits)
        randtests.write_report(path["raw_tests"], raw_results, cfg.alpha)
        randtests.write_report(path["extracted_tests"], ext_results, cfg.alpha)

    manifest = {
        "schema_version": cfg.schema_version,
        "config_sha256": cfg.digest(),
        "global_seed": cfg.seed,
        "stage_seeds": seeds,
        "timing": {
            "tc_s": budget.tc_s, "td_s": budget.td_s, "tr_s": budget.tr_s, "ts_s": budget.ts_s,
            "dominance_factor": budget.dominance_factor,
            "phase_decorrelated": check.phase_decorrelated,
            "sample_decorrelated": check.sample_decorrelated,
            "forced": bool(force and not check.ok),
        },
        "rates": {
            "raw_bps": budget_rates.raw_bps,
            "eta": budget_rates.extraction_ratio,
            "post_bps": budget_rates.post_bps,
        },
        "samples": n_samples,
        "raw_bits": raw_nbits,
        "adc_clipped": symbols.source_meta.get("adc_clipped", 0),
        "empty_bin_fraction": digitize.empty_bin_fraction(counts),
        "entropy": {
            "min_entropy_bits_per_symbol": report.min_entropy_bits_per_symbol,
            "symbol_bits": report.symbol_bits,
            "p_max": report.p_max,
            "p_upper": report.p_upper,
            "recommended_eta": recommended,
            "epsilon": eps,
        },
        "extractor": {
            "n_in": seed.n_in,
            "m_out": seed.m_out,
            "seed_sha256": seed.digest(),
            "input_bits": result.input_bits,
            "output_bits": result.output_bits,
            "discarded_bits": result.discarded_bits,
        },
        "tests": {
            "alpha": cfg.alpha,
            "raw": _tests_entry(raw_results),
            "extracted": _tests_entry(ext_results),
        },
        "files": {name: {"path": p.name, "sha256": _sha256(p)} for name, p in sorted(path.items())},
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return PipelineResult(out, manifest)
