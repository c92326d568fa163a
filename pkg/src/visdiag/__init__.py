"""Error analysis for video instance segmentation predictions."""

__version__ = "0.1.0"
