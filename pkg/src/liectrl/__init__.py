"""Universality analysis and pulse synthesis for globally controlled analog simulators."""

__version__ = "0.1.0"
