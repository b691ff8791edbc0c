"""Score-based inversion toolkit for stochastic forward models.

Proper scoring rules (energy, variogram, hybrid) used as objective
functions for inverse problems whose forward model carries stochastic
forcing. Ships an adjoint-capable P1 elliptic solver, a 3-bus power-grid
DAE integrator, limited-memory BFGS, Gaussian-process scenario sampling,
and verification metrics (RMSE, SSIM, rank histograms).
"""

__version__ = "0.1.0"
