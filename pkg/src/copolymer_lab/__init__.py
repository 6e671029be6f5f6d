"""Exact and Monte-Carlo computations for the random copolymer at a selective interface."""

__version__ = "0.1.0"
