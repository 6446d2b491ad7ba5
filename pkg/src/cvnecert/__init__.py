"""Certified upper bounds on conditional von Neumann entropy from Bell-operator values."""

__version__ = "0.1.0"
