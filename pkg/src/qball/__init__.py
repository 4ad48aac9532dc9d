"""Numerical toolkit for charged Q-balls of the nonlinear Klein-Gordon-Maxwell system.

Radial finite-volume discretization, minimization of E/|C| + delta*E, hylomorphy
certificates, delta-family sweeps and an energy/charge conserving time stepper.
"""

__version__ = "0.1.0"
