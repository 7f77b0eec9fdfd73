"""H(div)-conforming projection-based p-interpolation on reference elements."""

__version__ = "0.1.0"
