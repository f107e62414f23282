"""N-particle radial SLE / circular Dyson Brownian motion toolkit."""

__version__ = "0.1.0"
