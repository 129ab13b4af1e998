"""Space-time beamforming simulator for LEO satellite interference networks.

Submodules
----------
channel    steering vectors, multipath space-time channels, fading, CSIT errors
beamform   MRT / ZF / SLNR precoders and their space-time variants
metrics    SINR, spectral efficiency and closed-form baseline rates
scenario   network geometry sampling and the seeded Monte Carlo engine
ephemeris  TLE ingestion, orbit propagation, Doppler and interval feasibility
cli        experiment configuration, sweeps and CSV emission
"""

__version__ = "0.1.0"

from . import beamform, channel, ephemeris, kernels, metrics, scenario

__all__ = ["beamform", "channel", "ephemeris", "kernels", "metrics",
           "scenario", "__version__"]
