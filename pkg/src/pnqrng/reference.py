"""Measured values of the reference hardware build.

These are the numbers the simulator is calibrated against and the defaults of
the bundled configuration.  Units follow the canonical units of
:mod:`pnqrng.units` unless the name says otherwise.
"""

LINEWIDTH_HZ = 5.23e9
SPECTRAL_WIDTH_M = 0.0421e-9
CENTER_WAVELENGTH_M = 1551.1970e-9
COHERENCE_TIME_S = 0.19e-9

DELAY_LENGTH_M = 0.48
GROUP_INDEX = 1.468  # SMF-28 class fiber at 1550 nm
DELAY_TIME_S = 2.35e-9

PD_BANDWIDTH_HZ = 5.0e9
RESPONSE_TIME_S = 0.07e-9

SAMPLE_RATE_SPS = 250e6
SCOPE_MAX_RATE_SPS = 2.5e9
ADC_BITS = 8

# quadratic variance-law composites, A folded in
AC_MV2_PER_MW2 = 1.51e-6
AQ_MV2_PER_MW = 6.72e-7
F_MV2 = 4.50e-8
N_CALIBRATION_POWERS = 39

OPTIMAL_POWER_MW = 0.17237
PEAK_QSCNR = 1.29

RAW_RATE_BPS = 2.0e9
EXTRACTION_RATIO = 0.5
POST_RATE_BPS = 1.0e9
MIN_ENTROPY_BITS = 4.15
