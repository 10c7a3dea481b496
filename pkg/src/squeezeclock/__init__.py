"""Atomic-clock stability with non-unitary spin squeezing."""

__version__ = "0.1.0"
