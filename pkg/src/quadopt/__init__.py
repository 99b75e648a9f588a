"""Moment-closure and master-equation simulator for a quadratically coupled optomechanical cavity."""

__version__ = "0.1.0"
