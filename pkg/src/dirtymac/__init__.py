"""Capacity bounds and layered modulo-lattice simulation for multiple
access channels where each transmitter knows one additive interference.

Core pieces:

* :mod:`dirtymac.channel` -- Gaussian instances and bit-level depths
* :mod:`dirtymac.bitlevel` -- exact capacity region + zero-error codec
* :mod:`dirtymac.regions` -- suffix-sum polytopes and rate allocation
* :mod:`dirtymac.lattices` -- quantizers, modulo folding, Voronoi sampling
* :mod:`dirtymac.scheme` -- layered transceiver and Monte Carlo checks
* :mod:`dirtymac.gaussian` -- inner/outer bounds and gap certificates
* :mod:`dirtymac.cli` -- the ``dirtymac`` command
"""

__version__ = "0.1.0"

from .channel import (BitLevelParams, GaussianParams, to_bit_levels,
                      validate_gaussian)
from .errors import ConfigError, InfeasibleRate, InvariantViolation
from .regions import (Allocation, SuffixRateRegion, decompose_rates,
                      region_contains, region_from_layer_caps, region_vertices)

__all__ = [
    "__version__",
    "Allocation", "BitLevelParams", "ConfigError", "GaussianParams",
    "InfeasibleRate", "InvariantViolation", "SuffixRateRegion",
    "decompose_rates", "region_contains", "region_from_layer_caps",
    "region_vertices", "to_bit_levels", "validate_gaussian",
]
