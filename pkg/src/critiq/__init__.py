"""Simulation and verification toolkit for critical GI/G/1 queues."""

__version__ = "0.1.0"
