"""``pnqrng`` command line.

Exit status: 0 on success, 1 when an analysis fails (a budget violation, a
failed battery, too little entropy), 2 on usage or configuration errors.
The extractor worker count comes from ``--workers`` or ``PNQRNG_WORKERS``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import digitize, entropy, extractor, physics, randtests, spectral, variance
from .config import load_config
from .errors import ConfigError, PnqrngError
from .timing import TimingBudget, check_budget, format_budget, max_sample_rate
from .units import parse_quantity

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _config(args):
    return load_config(args.config, args.set, getattr(args, "seed", None))


def _add_config(p, seed=True):
    p.add_argument("--config", help="pipeline YAML (default: packaged calibrated config)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config field, e.g. --set 'sampler.sample_rate=500 MS/s'")
    if seed:
        p.add_argument("--seed", type=int, help="global seed (overrides the config)")


def cmd_timing(args) -> int:
    if any(v is not None for v in (args.tc, args.td, args.tr, args.ts)):
        if None in (args.tc, args.td, args.tr, args.ts):
            raise _Usage("give all of --tc --td --tr --ts, or none (to use the config)")
        budget = TimingBudget(parse_quantity(args.tc, "time"), parse_quantity(args.td, "time"),
                              parse_quantity(args.tr, "time"), parse_quantity(args.ts, "time"),
                              args.k if args.k is not None else 10.0)
    else:
        budget = _config(args).timing_budget()
        if args.k is not None:
            budget = TimingBudget(budget.tc_s, budget.td_s, budget.tr_s, budget.ts_s, args.k)
    check = check_budget(budget)
    print(format_budget(budget, check))
    print(f"max sample rate: {max_sample_rate(budget) / 1e6:.1f} MS/s (exclusive)")
    return EXIT_OK if check.ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    cfg = _config(args)
    budget = cfg.timing_budget()
    check = check_budget(budget)
    print(format_budget(budget, check))
    if not check.ok:
        why = []
        if not check.sample_decorrelated:
            why.append(f"Ts - Td = {(budget.ts_s - budget.td_s) * 1e9:.3f} ns is not above "
                       f"Tr = {budget.tr_s * 1e9:.3f} ns; consecutive samples share the delay window")
        if not check.phase_decorrelated:
            why.append(f"Td = {budget.td_s * 1e9:.3f} ns is not above "
                       f"{budget.dominance_factor:g} x Tc = {budget.dominance_factor * budget.tc_s * 1e9:.3f} ns")
        if not args.force:
            print("refusing to simulate: " + "; ".join(why) + " (use --force to override)",
                  file=sys.stderr)
            return EXIT_FAIL
        _warn("timing budget violated, continuing because of --force: " + "; ".join(why))
    n = args.samples or cfg.digitize.n_samples(cfg.sampler.adc_bits)
    laser = cfg.laser.with_power(parse_quantity(args.power, "power")) if args.power else cfg.laser
    seed = cfg.stage_seed("simulate")
    if args.intensity_noise:
        block = physics.simulate_intensity_noise(laser, cfg.chain, cfg.sampler, n, seed)
    else:
        block = physics.simulate_voltage(laser, cfg.chain, cfg.sampler, n, seed)
    physics.write_samples(args.out, block)
    print(f"wrote {n} samples to {args.out} (seed {seed})")
    return EXIT_OK


def cmd_qscnr(args) -> int:
    if args.fit:
        points = variance.read_points_csv(args.fit)
    else:
        cfg = _config(args)
        g = cfg.analysis
        powers = variance.calibration_powers(g.power_count, g.power_min_mw, g.power_max_mw)
        points = variance.measure_points(cfg.laser, cfg.chain, cfg.sampler, powers,
                                         g.samples_per_power, cfg.stage_seed("analysis"))
        if args.points_out:
            variance.write_points_csv(args.points_out, points)
    fit = variance.fit_variance(points)
    curve = variance.optimize_qscnr(fit)
    text = variance.fit_report(fit, curve)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_psd(args) -> int:
    if args.input:
        block = physics.read_samples(args.input)
        segment = args.segment or 4096
    else:
        cfg = _config(args)
        n = args.samples or 1 << 20
        seed = cfg.stage_seed("psd")
        sim = physics.simulate_intensity_noise if args.intensity_noise else physics.simulate_voltage
        block = sim(cfg.laser, cfg.chain, cfg.sampler, n, seed)
        segment = args.segment or cfg.analysis.psd_segment
    est = spectral.estimate_psd(block, segment)
    spectral.write_psd_csv(args.out, est)
    lo = parse_quantity(args.band_low, "frequency")
    hi = parse_quantity(args.band_high, "frequency")
    print(f"wrote {est.freqs_hz.size} bins to {args.out}; resolution {est.resolution_hz:.4g} Hz")
    print(f"mean PSD over [{lo:g}, {hi:g}] Hz: {spectral.average_band_power(est, lo, hi):.3f} dB re 1 mV^2/Hz")
    return EXIT_OK


def cmd_digitize(args) -> int:
    block = physics.read_samples(args.input)
    cfg = _config(args)
    fs = parse_quantity(args.full_scale, "voltage") if args.full_scale else cfg.digitize.full_scale_mv
    bits = cfg.sampler.adc_bits
    coded = digitize.adc_quantize(block, fs, bits)
    symbols = digitize.normalize_stream(coded, bits, cfg.digitize.normalize_block)
    digitize.write_bytes(args.out, symbols)
    counts = digitize.histogram(symbols)
    if args.histogram:
        digitize.write_histogram_csv(args.histogram, counts)
    rb = digitize.rate_budget(physics.SamplerConfig(block.sample_rate_sps, bits), cfg.extractor.eta)
    print(f"wrote {len(symbols)} {bits}-bit symbols to {args.out}")
    print(f"clipped samples: {coded.origin['adc_clipped']}; "
          f"empty bins: {digitize.empty_bin_fraction(counts):.3f}")
    print(f"raw rate {rb.raw_bps / 1e9:.4g} Gbps, post-processed {rb.post_bps / 1e9:.4g} Gbps "
          f"at eta = {rb.extraction_ratio}")
    return EXIT_OK


def cmd_entropy(args) -> int:
    block = digitize.read_bytes(args.input)
    report = entropy.min_entropy(block)
    print(report.as_text(), end="")
    print(f"recommended_eta = {entropy.recommend_ratio(report, args.margin)!r}")
    if args.eta is not None:
        entropy.confirm_ratio(report, args.eta)
        print(f"eta {args.eta} confirmed")
    return EXIT_OK


def _read_input_bits(path: str) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:4] == digitize.PQNB_MAGIC:
        return digitize.read_bytes(path).packed_bits()[0].tobytes()
    return raw


def cmd_extract(args) -> int:
    if args.seed_file:
        seed = extractor.read_seed(args.seed_file)
    else:
        n_in = args.n
        m_out = args.m if args.m is not None else n_in // 2
        if args.seed is None:
            raise _Usage("give --seed-file or --seed")
        seed = extractor.new_seed(n_in, m_out, rng_seed=args.seed)
        if args.seed_out:
            extractor.write_seed(args.seed_out, seed)
    data = _read_input_bits(args.input)
    eps = None
    if args.entropy_from:
        report = entropy.min_entropy(digitize.read_bytes(args.entropy_from))
        entropy.confirm_ratio(report, seed.ratio)
        eps = entropy.leftover_hash_epsilon(seed.n_in, seed.m_out, report)
    chunk = 1 << 22
    result = extractor.extract_stream(seed, (data[i:i + chunk] for i in range(0, len(data), chunk)),
                                      workers=args.workers)
    Path(args.out).write_bytes(result.data)
    report_path = Path(str(args.out) + ".report.txt") if not str(args.out).endswith(".bin") \
        else Path(str(args.out)[:-4] + ".report.txt")
    report_path.write_text(extractor.run_report(result, seed, eps))
    print(f"{result.input_bits} bits in, {result.output_bits} bits out "
          f"({result.blocks} blocks, {result.discarded_bits} trailing bits discarded)")
    return EXIT_OK


def cmd_test(args) -> int:
    data = _read_input_bits(args.input)
    bits = np.unpackbits(np.frombuffer(data, np.uint8))
    results = randtests.run_battery(bits, args.alpha, args.min_bits)
    text = randtests.format_report(results, args.alpha)
    print(text, end="")
    if args.report:
        Path(args.report).write_text(text)
    return EXIT_OK if randtests.battery_summary(results).overall_pass else EXIT_FAIL


def cmd_pipeline(args) -> int:
    from .pipeline import run_pipeline

    cfg = _config(args)
    result = run_pipeline(cfg, args.out, force=args.force, workers=args.workers)
    m = result.manifest
    print(f"raw rate {m['rates']['raw_bps'] / 1e9:.4g} Gbps, eta {m['rates']['eta']}, "
          f"post-processed {m['rates']['post_bps'] / 1e9:.4g} Gbps")
    print(f"min-entropy {m['entropy']['min_entropy_bits_per_symbol']:.4f} bits / "
          f"{m['entropy']['symbol_bits']}-bit symbol, epsilon {m['entropy']['epsilon']:.3e}")
    for name in ("raw", "extracted"):
        t = m["tests"][name]
        print(f"{name} battery: {t['pass_count']} pass, {t['fail_count']} fail, "
              f"{t['skip_count']} skipped")
    print(f"manifest: {Path(args.out) / 'manifest.json'}")
    return EXIT_OK if result.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pnqrng", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("timing", help="evaluate the four timescales and both predicates")
    for flag in ("--tc", "--td", "--tr", "--ts"):
        p.add_argument(flag, help="time with unit, e.g. 2.35ns")
    p.add_argument("--k", type=float, help="dominance factor for Td >> Tc (default 10)")
    _add_config(p)
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("simulate", help="simulate photodiode voltages to a .pqns file")
    _add_config(p)
    p.add_argument("--samples", type=int, help="sample count (default: digitize.raw_bits / adc_bits)")
    p.add_argument("--power", help="override optical power, e.g. 0.5mW")
    p.add_argument("--intensity-noise", action="store_true", help="bypass the interferometer")
    p.add_argument("--force", action="store_true", help="proceed despite a violated timing budget")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qscnr", help="fit the variance law and locate the QSCNR optimum")
    p.add_argument("--fit", help="CSV of power_mw,variance_mv2,n_samples (skip simulation)")
    p.add_argument("--points-out", help="write the simulated sweep here")
    p.add_argument("--out", help="write the fit report here")
    _add_config(p)
    p.set_defaults(func=cmd_qscnr)

    p = sub.add_parser("psd", help="Welch PSD of a sample file or a fresh simulation")
    p.add_argument("input", nargs="?", help=".pqns file (default: simulate from config)")
    p.add_argument("--samples", type=int)
    p.add_argument("--segment", type=int, help="Welch segment length (power of two)")
    p.add_argument("--intensity-noise", action="store_true")
    p.add_argument("--band-low", default="1 MHz")
    p.add_argument("--band-high", default="100 MHz")
    p.add_argument("--out", required=True)
    _add_config(p)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("digitize", help="ADC + min/max normalisation to a .pqnb symbol file")
    p.add_argument("input")
    p.add_argument("--full-scale", help="ADC full-scale span, e.g. 0.015mV")
    p.add_argument("--histogram", help="write symbol counts as CSV")
    p.add_argument("--out", required=True)
    _add_config(p, seed=False)
    p.set_defaults(func=cmd_digitize)

    p = sub.add_parser("entropy", help="MCV min-entropy of a .pqnb file")
    p.add_argument("input")
    p.add_argument("--margin", type=float, default=0.03)
    p.add_argument("--eta", type=float, help="check this extraction ratio against the bound")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("extract", help="Toeplitz-hash a .pqnb or raw bit file")
    p.add_argument("input")
    p.add_argument("--seed-file", help=".pqts seed")
    p.add_argument("--seed", type=int, help="PRNG seed for a fresh Toeplitz seed")
    p.add_argument("--seed-out", help="save the fresh seed as .pqts")
    p.add_argument("--n", type=int, default=extractor.DEFAULT_N_IN)
    p.add_argument("--m", type=int)
    p.add_argument("--entropy-from", help=".pqnb file whose min-entropy bounds the ratio")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("test", help="run the randomness battery on a bit file")
    p.add_argument("input")
    p.add_argument("--alpha", type=float, default=randtests.DEFAULT_ALPHA)
    p.add_argument("--min-bits", type=int, default=randtests.DEFAULT_MIN_BITS)
    p.add_argument("--report", help="write the CSV report here")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("pipeline", help="run every stage and write a manifest")
    _add_config(p)
    p.add_argument("--force", action="store_true", help="proceed despite a violated timing budget")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (_Usage, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e.filename}: no such file", file=sys.stderr)
        return EXIT_USAGE
    except PnqrngError as e:
        cause = getattr(e, "cause", e)
        print(f"error [{e.stage}]: {cause}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
