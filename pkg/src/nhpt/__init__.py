"""Network-aware planning of gas-to-heat-pump transitions."""

__version__ = "0.1.0"
