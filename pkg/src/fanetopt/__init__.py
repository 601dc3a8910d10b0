"""Multi-UAV coverage planning with FANET topology and power optimization."""

__version__ = "0.1.0"
