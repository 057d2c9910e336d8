"""Minimizing-movement gradient flows on non-positively curved spaces."""

__version__ = "0.1.0"
