import copy

import pytest

from pnqrng.config import (STAGES, apply_overrides, default_document, derive_seed, from_dict, load_config)
from pnqrng.errors import ConfigError


def test_calibrated_defaults():
    cfg = load_config()
    assert cfg.seed == 1
    assert cfg.sampler.sample_rate_sps == 250e6 and cfg.sampler.adc_bits == 8
    assert cfg.laser.power_mw == pytest.approx(0.17237)
    assert cfg.chain.delay_length_m == pytest.approx(0.48)
    assert cfg.extractor.m_out == 2048
    assert cfg.digitize.n_samples(8) == 1_250_000
    assert cfg.timing_budget().td_s == pytest.approx(2.3504e-9, rel=1e-3)


def test_stage_seeds():
    cfg = load_config()
    seeds = [cfg.stage_seed(s) for s in STAGES]
    assert len(set(seeds)) == len(STAGES)
    assert seeds[0] == derive_seed(1, "simulate") == derive_seed(1, "simulate")
    assert load_config(seed=2).stage_seed("simulate") != seeds[0]
    with pytest.raises(ConfigError):
        cfg.stage_seed("bogus")


def test_overrides():
    cfg = load_config(overrides=["sampler.sample_rate=500 MS/s", "extractor.eta=0.25"])
    assert cfg.sampler.sample_rate_sps == 500e6 and cfg.extractor.m_out == 1024
    for bad in (["sampler.nope=1"], ["nope.x=1"], ["sampler.sample_rate"]):
        with pytest.raises(ConfigError):
            apply_overrides(default_document(), bad)


def test_digest_tracks_content():
    assert load_config().digest() == load_config().digest()
    assert load_config(seed=5).digest() != load_config().digest()


def test_file(tmp_path):
    import yaml
    doc = default_document()
    doc["seed"] = 99
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(doc))
    assert load_config(tmp_path / "c.yaml").seed == 99
    (tmp_path / "bad.yaml").write_text("a: [")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


@pytest.mark.parametrize("path,value", [
    (("schema_version",), 2), (("seed",), -1), (("seed",), "x"),
    (("laser", "linewidth"), 5.23e9),  # bare number for a dimensioned value
    (("chain", "delay_length"), "48 GHz"),
    (("sampler", "adc_bits"), 8.5), (("extractor", "n_in"), 1000), (("extractor", "eta"), 1.5),
    (("extractor", "eta"), 0.3), (("tests", "alpha"), 0.0), (("entropy", "safety_margin"), 1.0),
    (("analysis", "power_count"), 2), (("digitize", "full_scale"), "0 mV"),
    (("timing", "dominance_factor"), 0.5), (("laser", "power"), "-1 mW"),
])
def test_validation(path, value):
    doc = copy.deepcopy(default_document())
    node = doc
    for p in path[:-1]:
        node = node[p]
    node[path[-1]] = value
    with pytest.raises(ConfigError):
        from_dict(doc)


def test_missing_section():
    doc = default_document()
    del doc["chain"]
    with pytest.raises(ConfigError, match="chain"):
        from_dict(doc)
