"""Rate and outage analysis of alpha-duplex full-duplex cellular networks.

Two engines are provided: closed-form Laplace-transform expressions evaluated
by nested quadrature (:mod:`alphaduplex.analytic`) and a Poisson point process
Monte Carlo simulator (:mod:`alphaduplex.simulate`) that serves as its oracle.
"""

from alphaduplex.geometry import NetworkConfig, SIDistribution, Topology, reference_config
from alphaduplex.numerics import ConvergenceError, QuadratureSpec
from alphaduplex.spectrum import BandPlan, PulseKind, SpectralFactors, make_band_plan, spectral_factors

__version__ = "0.1.0"

__all__ = [
    "BandPlan",
    "ConvergenceError",
    "NetworkConfig",
    "PulseKind",
    "QuadratureSpec",
    "SIDistribution",
    "SpectralFactors",
    "Topology",
    "make_band_plan",
    "spectral_factors",
    "reference_config",
]
