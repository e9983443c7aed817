"""Compressive-sensing image pipeline with key-scrambled DCT coefficients."""
from ._backend import backend_name

__version__ = "0.1.0"
__all__ = ["backend_name", "__version__"]
