"""Linear sampling experiments for 2D sound-soft obstacle scattering."""

__version__ = "0.1.0"
