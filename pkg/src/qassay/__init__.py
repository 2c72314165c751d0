"""Statistical mining and runtime checking of quantum-circuit assertions."""

__version__ = "0.1.0"
