"""Seeded test generation with per-component provenance."""

__version__ = "0.1.0"
