"""Desk-scale laboratory for integral geometry and nonlocal operators."""
__version__ = "0.1.0"
