"""3GPP TR 38.901 spatial channel model for 0.5-100 GHz."""

__version__ = "0.1.0"
