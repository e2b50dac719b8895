"""Constraints consensus for distributed abstract (LP-type) optimization."""

__version__ = "0.1.0"
