"""epswcore - core outcomes of two-firm labour markets under equal-pay rules."""

__version__ = "0.1.0"
