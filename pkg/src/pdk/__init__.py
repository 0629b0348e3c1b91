"""Numerical model of single-photon detectors.

Submodules:

* ``spectral``: grids, sampled functions, quadrature, Fourier pair, delay metrics
* ``network``: transmission through networks of discrete states
* ``wavepacket``: time-dependent trigger, inverse design of couplings
* ``amplification``: number noise of linear and nonlinear amplifiers
* ``povm``: click element, figures of merit, fluctuations
* ``cli``: batch front-end
"""

__version__ = "0.1.0"
