"""Kinematic-primitive action model and action-similarity experiment toolkit."""

__version__ = "0.1.0"
