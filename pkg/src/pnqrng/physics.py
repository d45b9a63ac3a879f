"""Seedable simulation of the laser -> delayed interferometer -> photodiode chain.

The quantum part of the laser phase is a Wiener process.  Its diffusion rate
is set by the power-dependent quantum linewidth, chosen so that the phase
difference accumulated over the interferometer delay has variance ``Q / P``.
On top of that sits a slow Ornstein-Uhlenbeck term of stationary variance
``C`` (classical phase noise).  The interferometer is biased at quadrature, so
the photocurrent is ``gain * P * sin(dtheta)``.  It is band-limited by a
single-pole photodiode and the detector background ``F`` is added at the
sampler.  With ``A = gain**2`` the sample variance follows
``A*C*P**2 + A*Q*P + F``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from . import reference as ref
from .errors import FormatError, InvalidModelError, ResolutionError

C_LIGHT = 299_792_458.0  # m/s
RISE_TIME_FACTOR = 0.35  # Tr * f_3dB for a single-pole response
TEN_NINETY = math.log(9.0)  # 10-90 % rise time of a single pole, in units of tau
CLASSICAL_CORRELATION_PERIODS = 100  # OU correlation time, in sample periods
INTENSITY_NOISE_FRACTION = 0.1  # RIN voltage / quantum voltage at the optimum

_CHUNK_SAMPLES = 1 << 15
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class LaserModel:
    """Single-frequency laser.

    ``quantum_strength`` (Q, rad^2 mW) and ``classical_strength`` (C, rad^2)
    give the phase-difference variance ``Q / P + C`` at power ``power_mw``.
    ``rin`` is the relative intensity-noise standard deviation per sample.
    """

    linewidth_hz: float
    center_wavelength_m: float
    power_mw: float
    quantum_strength: float
    classical_strength: float
    spectral_width_m: float = 0.0
    rin: float = 0.0

    def __post_init__(self):
        if not self.linewidth_hz > 0:
            raise InvalidModelError(f"linewidth must be positive, got {self.linewidth_hz}")
        if not self.center_wavelength_m > 0:
            raise InvalidModelError("center wavelength must be positive")
        if not self.power_mw >= 0:
            raise InvalidModelError(f"power must be non-negative, got {self.power_mw}")
        if self.quantum_strength < 0 or self.classical_strength < 0:
            raise InvalidModelError("phase-noise strengths Q and C must be non-negative")
        if self.spectral_width_m < 0 or self.rin < 0:
            raise InvalidModelError("spectral width and RIN must be non-negative")

    def with_power(self, power_mw: float) -> LaserModel:
        return dataclasses.replace(self, power_mw=power_mw)


@dataclass(frozen=True)
class OpticalChain:
    delay_length_m: float
    group_index: float
    pd_bandwidth_hz: float
    pd_background_var: float  # F, mV^2
    gain: float = 1.0  # mV per (mW rad); A = gain**2

    def __post_init__(self):
        if self.delay_length_m < 0 or not self.group_index > 0:
            raise InvalidModelError("delay length must be >= 0 and group index > 0")
        if not self.pd_bandwidth_hz > 0:
            raise InvalidModelError("photodiode bandwidth must be positive")
        if self.pd_background_var < 0:
            raise InvalidModelError("detector background variance must be non-negative")
        if not self.gain > 0:
            raise InvalidModelError("gain must be positive")


@dataclass(frozen=True)
class SamplerConfig:
    sample_rate_sps: float
    adc_bits: int = 8
    sim_oversample: int = 16

    def __post_init__(self):
        if not self.sample_rate_sps > 0:
            raise InvalidModelError("sample rate must be positive")
        if not 1 <= self.adc_bits <= 16:
            raise InvalidModelError(f"adc_bits must be in [1, 16], got {self.adc_bits}")
        if self.sim_oversample < 4:
            raise InvalidModelError("sim_oversample must be an integer >= 4")

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.sample_rate_sps


@dataclass
class SampleBlock:
    samples: np.ndarray  # mV
    sample_period_s: float
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise InvalidModelError("a sample block must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidModelError("sample block contains non-finite values")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def sample_rate_sps(self) -> float:
        return 1.0 / self.sample_period_s


def coherence_time(laser: LaserModel) -> float:
    """Tc = 1 / linewidth."""
    if not laser.linewidth_hz > 0:
        raise InvalidModelError("linewidth must be positive")
    return 1.0 / laser.linewidth_hz


def linewidth_from_spectrum(spectral_width_m: float, center_wavelength_m: float) -> float:
    """Convert an optical spectral width to a linewidth in Hz: c * dl / l**2."""
    if spectral_width_m < 0 or not center_wavelength_m > 0:
        raise InvalidModelError("spectral width must be >= 0 and wavelength > 0")
    return C_LIGHT * spectral_width_m / center_wavelength_m**2


def delay_time(chain: OpticalChain) -> float:
    return chain.group_index * chain.delay_length_m / C_LIGHT


def response_time(chain: OpticalChain) -> float:
    return RISE_TIME_FACTOR / chain.pd_bandwidth_hz


def quantum_linewidth(laser: LaserModel, delay_s: float) -> float:
    """Linewidth of the quantum Wiener phase that yields Var(dtheta) = Q / P over ``delay_s``.

    Returns ``inf`` for a dark laser with Q > 0 and 0 when Q == 0.
    """
    if laser.quantum_strength == 0:
        return 0.0
    if laser.power_mw == 0:
        return math.inf
    return laser.quantum_strength / (2 * math.pi * laser.power_mw * delay_s)


def optimal_power(laser: LaserModel, chain: OpticalChain) -> float:
    """Power maximising the quantum-to-classical ratio, sqrt(F / (A C))."""
    a = chain.gain**2
    if laser.classical_strength == 0 or chain.pd_background_var == 0:
        raise InvalidModelError("optimum undefined without classical noise and background")
    return math.sqrt(chain.pd_background_var / (a * laser.classical_strength))


def calibrated_rin(quantum_strength: float, optimum_power_mw: float) -> float:
    """RIN whose voltage is 10 % of the quantum phase-noise voltage at the optimum."""
    return INTENSITY_NOISE_FRACTION * math.sqrt(quantum_strength / optimum_power_mw)


def calibrated_models(power_mw: float = ref.OPTIMAL_POWER_MW):
    """Laser, chain and sampler reproducing the reference variance-law fit with A = 1."""
    p_opt = math.sqrt(ref.F_MV2 / ref.AC_MV2_PER_MW2)
    laser = LaserModel(
        linewidth_hz=ref.LINEWIDTH_HZ,
        center_wavelength_m=ref.CENTER_WAVELENGTH_M,
        spectral_width_m=ref.SPECTRAL_WIDTH_M,
        power_mw=power_mw,
        quantum_strength=ref.AQ_MV2_PER_MW,
        classical_strength=ref.AC_MV2_PER_MW2,
        rin=calibrated_rin(ref.AQ_MV2_PER_MW, p_opt),
    )
    chain = OpticalChain(
        delay_length_m=ref.DELAY_LENGTH_M,
        group_index=ref.GROUP_INDEX,
        pd_bandwidth_hz=ref.PD_BANDWIDTH_HZ,
        pd_background_var=ref.F_MV2,
        gain=1.0,
    )
    sampler = SamplerConfig(sample_rate_sps=ref.SAMPLE_RATE_SPS, adc_bits=ref.ADC_BITS)
    return laser, chain, sampler


def model_hash(laser: LaserModel, chain: OpticalChain, sampler: SamplerConfig,
               kind: str = "voltage") -> bytes:
    payload = {
        "kind": kind,
        "laser": dataclasses.asdict(laser),
        "chain": dataclasses.asdict(chain),
        "sampler": dataclasses.asdict(sampler),
    }
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).digest()


def _check_request(n_samples: int, seed: int):
    if n_samples <= 0:
        raise InvalidModelError("n_samples must be positive")
    if not 0 <= seed <= MAX_SEED:
        raise InvalidModelError("seed must be a 64-bit unsigned integer")


def _generators(seed: int, count: int):
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def wiener_phase_difference(linewidth_hz: float, delay_steps: int, fine_step_s: float,
                            n: int, rng: np.random.Generator) -> np.ndarray:
    """theta(t) - theta(t + delay) for a Wiener phase, on ``n`` consecutive fine steps.

    Increments have variance ``2 pi linewidth fine_step``, so the difference
    has variance ``2 pi linewidth delay_steps fine_step``.
    """
    std = math.sqrt(2 * math.pi * linewidth_hz * fine_step_s)
    inc = rng.standard_normal(n + delay_steps - 1) * std
    cs = np.concatenate(([0.0], np.cumsum(inc)))
    return cs[:n] - cs[delay_steps:delay_steps + n]


def _fine_grid(chain: OpticalChain, sampler: SamplerConfig):
    dt = sampler.sample_period_s / sampler.sim_oversample
    td = delay_time(chain)
    if td < 2 * dt:
        raise ResolutionError(
            f"delay {td:.3e} s is shorter than two fine steps ({dt:.3e} s); "
            "raise sim_oversample"
        )
    return dt, int(round(td / dt))


def _simulate(laser, chain, sampler, n_samples, seed, tap=False):
    _check_request(n_samples, seed)
    dt, d = _fine_grid(chain, sampler)
    os_ = sampler.sim_oversample
    rng_q, rng_c, rng_d = _generators(seed, 3)

    p = laser.power_mw
    quantum = p > 0 and laser.quantum_strength > 0
    classical = laser.classical_strength > 0
    lw_q = quantum_linewidth(laser, d * dt) if quantum else 0.0
    inc_std = math.sqrt(2 * math.pi * lw_q * dt)

    rho = math.exp(-dt / (CLASSICAL_CORRELATION_PERIODS * sampler.sample_period_s))
    ou_std = math.sqrt(laser.classical_strength * (1 - rho * rho))
    zi_c = None
    if classical:
        zi_c = np.array([rho * math.sqrt(laser.classical_strength) * rng_c.standard_normal()])

    tau = response_time(chain) / TEN_NINETY
    a = math.exp(-dt / tau)
    zi_f = None
    amp = chain.gain * p
    bg_std = math.sqrt(chain.pd_background_var)

    pending = rng_q.standard_normal(d) * inc_std if quantum else None
    out = np.empty(n_samples)
    phase_tap = np.empty(n_samples) if tap else None

    for start in range(0, n_samples, _CHUNK_SAMPLES):
        ns = min(_CHUNK_SAMPLES, n_samples - start)
        nf = ns * os_
        dtheta = np.zeros(nf)
        if quantum:
            inc = np.concatenate((pending, rng_q.standard_normal(nf) * inc_std))
            cs = np.concatenate(([0.0], np.cumsum(inc)))
            dtheta -= cs[d:d + nf] - cs[:nf]
            pending = inc[nf:nf + d]
        if classical:
            phi, zi_c = lfilter([ou_std], [1.0, -rho], rng_c.standard_normal(nf), zi=zi_c)
            dtheta += phi
        if tap:
            phase_tap[start:start + ns] = dtheta[::os_]
        sig = amp * np.sin(dtheta)
        if zi_f is None:
            zi_f = np.array([a * sig[0]])
        v, zi_f = lfilter([1.0 - a], [1.0, -a], sig, zi=zi_f)
        out[start:start + ns] = v[::os_]
        if bg_std > 0:
            out[start:start + ns] += rng_d.standard_normal(ns) * bg_std

    return out, phase_tap


def _origin(laser, chain, sampler, seed, kind):
    return {"seed": int(seed), "model_hash": model_hash(laser, chain, sampler, kind).hex(),
            "kind": kind}


def simulate_voltage(laser: LaserModel, chain: OpticalChain, sampler: SamplerConfig,
                     n_samples: int, seed: int) -> SampleBlock:
    """Photodiode voltage (mV) behind the delayed interferometer, one value per sample period."""
    out, _ = _simulate(laser, chain, sampler, n_samples, seed)
    return SampleBlock(out, sampler.sample_period_s, _origin(laser, chain, sampler, seed, "voltage"))


def simulate_phase_difference(laser: LaserModel, chain: OpticalChain, sampler: SamplerConfig,
                              n_samples: int, seed: int) -> np.ndarray:
    """Debug tap: the interferometer phase difference (rad) at each sampling instant.

    Draws from the same streams as :func:`simulate_voltage`, so the values are the
    ones that entered the sine for the same ``seed``.
    """
    _, phase = _simulate(laser, chain, sampler, n_samples, seed, tap=True)
    return phase


def simulate_intensity_noise(laser: LaserModel, chain: OpticalChain, sampler: SamplerConfig,
                             n_samples: int, seed: int) -> SampleBlock:
    """Direct detection with the interferometer bypassed: DC level plus RIN plus background."""
    _check_request(n_samples, seed)
    _, rng_i, rng_d = _generators(seed, 3)
    level = chain.gain * laser.power_mw
    out = np.full(n_samples, level)
    if laser.rin > 0 and level > 0:
        out += rng_i.standard_normal(n_samples) * (level * laser.rin)
    if chain.pd_background_var > 0:
        out += rng_d.standard_normal(n_samples) * math.sqrt(chain.pd_background_var)
    return SampleBlock(out, sampler.sample_period_s,
                       _origin(laser, chain, sampler, seed, "intensity"))


# .pqns: 64-byte header then little-endian float64 samples
_PQNS = struct.Struct("<4sHHdQQ32s")
PQNS_MAGIC = b"PQNS"
PQNS_VERSION = 1


def write_samples(path: str | Path, block: SampleBlock) -> None:
    seed = int(block.origin.get("seed", 0))
    digest = bytes.fromhex(block.origin.get("model_hash", "00" * 32))
    header = _PQNS.pack(PQNS_MAGIC, PQNS_VERSION, 0, block.sample_rate_sps,
                        len(block), seed, digest)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(block.samples.astype("<f8").tobytes())


def read_samples(path: str | Path) -> SampleBlock:
    raw = Path(path).read_bytes()
    if len(raw) < _PQNS.size:
        raise FormatError(f"{path}: too short for a .pqns header")
    magic, version, _, fs, n, seed, digest = _PQNS.unpack_from(raw)
    if magic != PQNS_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != PQNS_VERSION:
        raise FormatError(f"{path}: unsupported .pqns version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_PQNS.size)
    if body.size != n:
        raise FormatError(f"{path}: header says {n} samples, file holds {body.size}")
    return SampleBlock(body.astype(np.float64), 1.0 / fs,
                       {"seed": seed, "model_hash": digest.hex()})
