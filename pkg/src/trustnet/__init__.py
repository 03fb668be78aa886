"""Trust-based resilient consensus: simulation, detection and analytical bounds."""

__version__ = "0.1.0"
