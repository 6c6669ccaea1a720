"""Fast spectral reconstruction for thermoacoustic tomography."""

__version__ = "0.1.0"
