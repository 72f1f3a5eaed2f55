"""Adaptive M-QAM over the JFTS composite fading/shadowing channel."""

__version__ = "0.1.0"
