"""Quadratic voltage-variance law and the quantum-signal-to-classical-noise ratio.

The model is ``var(P) = AC * P**2 + AQ * P + F``.  ``AQ * P`` is the quantum
phase diffusion, ``AC * P**2`` the classical phase noise and ``F`` the detector
background.  QSCNR is ``AQ * P / (AC * P**2 + F)``.  Its maximum sits at
``P* = sqrt(F / AC)`` with peak value ``AQ / (2 sqrt(AC F))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls

from . import reference as ref
from .errors import DegenerateFitError, FormatError, InvalidModelError, UnderdeterminedError


@dataclass(frozen=True)
class VariancePoint:
    power_mw: float
    variance_mv2: float
    n_samples: int = 0

    def __post_init__(self):
        if self.power_mw < 0 or self.variance_mv2 < 0:
            raise InvalidModelError("power and variance must be non-negative")


@dataclass(frozen=True)
class VarianceFit:
    ac: float  # mV^2 / mW^2
    aq: float  # mV^2 / mW
    f: float  # mV^2
    residual_rms: float = 0.0

    def __post_init__(self):
        if min(self.ac, self.aq, self.f) < 0:
            raise InvalidModelError("fit composites must be non-negative")

    def variance(self, power_mw):
        p = np.asarray(power_mw, dtype=float)
        return self.ac * p * p + self.aq * p + self.f


REFERENCE_FIT = VarianceFit(ref.AC_MV2_PER_MW2, ref.AQ_MV2_PER_MW, ref.F_MV2)


@dataclass(frozen=True)
class QscnrCurve:
    fit: VarianceFit
    optimum_power_mw: float
    optimum_qscnr: float


def calibration_powers(n: int = ref.N_CALIBRATION_POWERS, p_min: float = 0.01,
                       p_max: float = 2.0) -> np.ndarray:
    """Log-spaced laser powers over (0, p_max] mW for a variance sweep."""
    return np.geomspace(p_min, p_max, n)


def fit_variance(points: Sequence[VariancePoint]) -> VarianceFit:
    """Non-negative least-squares fit of the quadratic variance law."""
    if len(points) < 3 or len({p.power_mw for p in points}) < 3:
        raise UnderdeterminedError("need at least three distinct powers to fit three parameters")
    p = np.array([pt.power_mw for pt in points], dtype=float)
    y = np.array([pt.variance_mv2 for pt in points], dtype=float)
    design = np.column_stack([p * p, p, np.ones_like(p)])
    # Equilibrate columns and target so the active-set solver works near unit scale.
    col = np.linalg.norm(design, axis=0)
    col[col == 0] = 1.0
    y_scale = float(np.max(np.abs(y))) or 1.0
    coef, _ = nnls(design / col, y / y_scale)
    coef = coef / col * y_scale
    resid = design @ coef - y
    rms = math.sqrt(math.fsum(r * r for r in resid) / len(resid))
    return VarianceFit(ac=float(coef[0]), aq=float(coef[1]), f=float(coef[2]), residual_rms=rms)


def qscnr(fit: VarianceFit, power_mw: float) -> float:
    denom = fit.ac * power_mw * power_mw + fit.f
    if not denom > 0:
        raise DegenerateFitError(f"classical noise plus background vanishes at P = {power_mw} mW")
    return fit.aq * power_mw / denom


def optimize_qscnr(fit: VarianceFit) -> QscnrCurve:
    if fit.ac <= 0 or fit.f <= 0:
        raise DegenerateFitError(
            "QSCNR has no finite optimum: with AC = 0 it grows without bound in P, "
            "with F = 0 it grows without bound as P -> 0"
        )
    if fit.aq <= 0:
        raise DegenerateFitError("AQ = 0: there is no quantum signal to optimise")
    p_opt = math.sqrt(fit.f / fit.ac)
    return QscnrCurve(fit, p_opt, fit.aq / (2.0 * math.sqrt(fit.ac * fit.f)))


def synthetic_points(fit: VarianceFit, powers: Iterable[float], rel_noise: float = 0.0,
                     rng: np.random.Generator | None = None, n_samples: int = 0):
    """Points on the variance law, optionally with multiplicative Gaussian noise."""
    powers = np.asarray(list(powers), dtype=float)
    var = fit.variance(powers)
    if rel_noise:
        rng = rng or np.random.default_rng()
        var = var * (1.0 + rel_noise * rng.standard_normal(var.shape))
        var = np.clip(var, 0.0, None)
    return [VariancePoint(float(p), float(v), n_samples) for p, v in zip(powers, var)]


def measure_points(laser, chain, sampler, powers, n_samples, seed):
    """Simulate the voltage at each power and record its sample variance."""
    from .physics import simulate_voltage

    points = []
    for i, p in enumerate(powers):
        block = simulate_voltage(laser.with_power(float(p)), chain, sampler, n_samples,
                                 (seed + i) % 2**64)
        points.append(VariancePoint(float(p), float(np.var(block.samples)), n_samples))
    return points


def write_points_csv(path: str | Path, points: Sequence[VariancePoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["power_mw", "variance_mv2", "n_samples"])
        for pt in points:
            w.writerow([repr(pt.power_mw), repr(pt.variance_mv2), pt.n_samples])


def read_points_csv(path: str | Path) -> list[VariancePoint]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"power_mw", "variance_mv2"} <= set(reader.fieldnames):
            raise FormatError(f"{path}: expected header power_mw,variance_mv2,n_samples")
        try:
            return [VariancePoint(float(r["power_mw"]), float(r["variance_mv2"]),
                                  int(r.get("n_samples") or 0)) for r in reader]
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def fit_report(fit: VarianceFit, curve: QscnrCurve | None = None) -> str:
    """``key = value`` lines; numbers carry no thousands separators."""
    lines = [
        "# variance law: var = ac*P^2 + aq*P + f  (P in mW; var in mV^2)",
        f"ac_mv2_per_mw2 = {fit.ac:.6e}",
        f"aq_mv2_per_mw = {fit.aq:.6e}",
        f"f_mv2 = {fit.f:.6e}",
        f"residual_rms_mv2 = {fit.residual_rms:.6e}",
    ]
    if curve is not None:
        lines += [
            f"optimum_power_mw = {curve.optimum_power_mw:.6f}",
            f"optimum_power_uw = {curve.optimum_power_mw * 1e3:.3f}",
            f"peak_qscnr = {curve.optimum_qscnr:.6f}",
        ]
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = float(value)
    return out
