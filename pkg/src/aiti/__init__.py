"""AI threat-intelligence toolkit: red-team small models, encode findings, share them."""

__version__ = "0.1.0"
