"""Software twin of a phase-noise quantum random number generator.

Stages: ``physics`` (signal-chain simulation), ``timing``, ``variance``
(QSCNR fit), ``spectral``, ``digitize``, ``entropy``, ``extractor``
(Toeplitz hashing), ``randtests`` and ``pipeline``.
"""

from .errors import PnqrngError

__version__ = "0.1.0"
__all__ = ["PnqrngError", "__version__"]
