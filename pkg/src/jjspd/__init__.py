"""Toolkit for current-biased Josephson-junction single-photon detectors.

Subpackages cover the full chain from device description to parameter
recovery:

- ``junction``      device records and derived junction parameters
- ``escape``        tilted-washboard barrier and TA/MQT escape rates
- ``optics``        Gaussian-beam photon delivery and absorption profiles
- ``quasiparticle`` photon-generated quasiparticles, shot noise, T*
- ``simulate``      seeded Monte Carlo of switching events
- ``analysis``      counting statistics and the switching-distribution
                    to escape-rate transform
- ``fit``           weighted nonlinear least-squares parameter estimation
- ``cli``           command-line pipeline (``jjspd`` entry point)
"""

__version__ = "0.1.0"

from . import analysis, escape, fit, junction, optics, quasiparticle, simulate

__all__ = [
    "__version__",
    "analysis",
    "escape",
    "fit",
    "junction",
    "optics",
    "quasiparticle",
    "simulate",
]
