"""Confidence-based 3D multi-object tracking by detection."""

__version__ = "0.1.0"
