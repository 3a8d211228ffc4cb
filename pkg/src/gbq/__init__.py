"""Pseudo-spectral simulator and I-method diagnostics for the defocusing
generalized Boussinesq equation u_tt - u_xx + u_xxxx - (|u|^{2k} u)_xx = 0."""

__version__ = "0.1.0"
