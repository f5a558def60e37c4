"""Fisher information for twin-Fock interferometry with lossy preparation, arms and detectors."""

__version__ = "0.1.0"
