"""Numerical laboratory for 3D MHD near a uniform background magnetic field.

Modules
-------
spectral      periodic grids, FFTs, Leray projection and norms
linear        per-frequency symbol, eigenvalues, kernel matrix and subdomains
bounds        calibrated audit of the subdomain kernel bounds
propagator    whole-space linear evolution by Fourier quadrature, decay fits
solver        dealiased exponential integrators for the nonlinear system
energy        time-weighted energy functionals and initial-data norms
inequalities  empirical checks of the anisotropic product inequalities
cli           command line entry points
"""
__version__ = "0.1.0"
