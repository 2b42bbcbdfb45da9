"""Collect, extract, classify and store marketplace ads for wildlife products."""

__version__ = "0.1.0"
