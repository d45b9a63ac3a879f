import subprocess
import sys

import numpy as np
import pytest

from pnqrng import extractor
from pnqrng.cli import main


def test_timing_row(capsys):
    assert main(["timing", "--tc", "0.19ns", "--td", "2.35ns", "--tr", "0.07ns", "--ts", "4.00ns"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1].split() == ["0.19", "2.35", "0.07", "4.00", "True", "True"]


def test_timing_failure_and_usage(capsys):
    assert main(["timing", "--tc", "0.19ns", "--td", "2.35ns", "--tr", "0.07ns", "--ts", "2.40ns"]) == 1
    assert main(["timing", "--tc", "0.19ns"]) == 2
    assert main(["timing", "--tc", "0.19", "--td", "2.35ns", "--tr", "0.07ns", "--ts", "4ns"]) == 2
    with pytest.raises(SystemExit) as e:
        main(["timing", "--bogus"])
    assert e.value.code == 2


def test_timing_from_config(capsys):
    assert main(["timing"]) == 0
    assert main(["timing", "--set", "sampler.sample_rate=500 MS/s"]) == 1


def test_simulate_refuses_then_forced(tmp_path, capsys):
    out = tmp_path / "s.pqns"
    args = ["simulate", "--set", "sampler.sample_rate=500 MS/s", "--samples", "1000", "--out", str(out)]
    assert main(args) == 1
    assert "refusing" in capsys.readouterr().err and not out.exists()
    assert main(args + ["--force"]) == 0
    assert "warning" in capsys.readouterr().err and out.exists()


def test_qscnr_from_csv(tmp_path, capsys):
    from pnqrng.variance import REFERENCE_FIT, calibration_powers, synthetic_points, write_points_csv
    write_points_csv(tmp_path / "p.csv", synthetic_points(REFERENCE_FIT, calibration_powers()))
    assert main(["qscnr", "--fit", str(tmp_path / "p.csv"), "--out", str(tmp_path / "r.txt")]) == 0
    assert "optimum_power_uw = 172.63" in (tmp_path / "r.txt").read_text()


def test_config_error(capsys):
    assert main(["timing", "--set", "sampler.sample_rate=500"]) == 2
    assert "error" in capsys.readouterr().err


def test_stage_chain(tmp_path, capsys):
    s, b = tmp_path / "s.pqns", tmp_path / "b.pqnb"
    assert main(["simulate", "--samples", "262144", "--out", str(s)]) == 0
    assert main(["psd", str(s), "--out", str(tmp_path / "psd.csv")]) == 0
    assert main(["digitize", str(s), "--out", str(b), "--histogram", str(tmp_path / "h.csv")]) == 0
    assert main(["entropy", str(b), "--eta", "0.5"]) == 0
    assert "recommended_eta = 0.5" in capsys.readouterr().out
    assert main(["entropy", str(b), "--eta", "0.5625"]) == 1
    assert "error [entropy]" in capsys.readouterr().err
    assert main(["extract", str(b), "--seed", "3", "--seed-out", str(tmp_path / "k.pqts"),
                 "--entropy-from", str(b), "--out", str(tmp_path / "x.bin")]) == 0
    assert "epsilon = " in (tmp_path / "x.report.txt").read_text()
    assert main(["extract", str(b), "--seed-file", str(tmp_path / "k.pqts"), "--out", str(tmp_path / "y.bin")]) == 0
    assert (tmp_path / "x.bin").read_bytes() == (tmp_path / "y.bin").read_bytes()


def test_test_command(tmp_path, capsys):
    good = np.random.Generator(np.random.PCG64(1)).integers(0, 256, 125_000, dtype=np.uint8)
    (tmp_path / "good.bin").write_bytes(good.tobytes())
    assert main(["test", str(tmp_path / "good.bin"), "--report", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text().splitlines()[-1].endswith("overall=pass")
    (tmp_path / "zero.bin").write_bytes(bytes(125_000))
    assert main(["test", str(tmp_path / "zero.bin")]) == 1
    (tmp_path / "short.bin").write_bytes(bytes(100))
    assert main(["test", str(tmp_path / "short.bin")]) == 1


def test_extract_needs_seed(tmp_path):
    (tmp_path / "in.bin").write_bytes(bytes(1024))
    assert main(["extract", str(tmp_path / "in.bin"), "--out", str(tmp_path / "o.bin")]) == 2
    assert main(["extract", str(tmp_path / "missing.bin"), "--seed", "1", "--out", str(tmp_path / "o.bin")]) == 2


def test_extract_raw_file(tmp_path):
    data = np.random.default_rng(0).integers(0, 256, 1024, dtype=np.uint8)
    (tmp_path / "in.bin").write_bytes(data.tobytes())
    assert main(["extract", str(tmp_path / "in.bin"), "--seed", "4", "--out", str(tmp_path / "o.bin")]) == 0
    want = extractor.extract_stream(extractor.new_seed(4096, 2048, 4), [data]).data
    assert (tmp_path / "o.bin").read_bytes() == want


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pnqrng.cli", "timing"], capture_output=True, text=True)
    assert r.returncode == 0 and "True" in r.stdout
